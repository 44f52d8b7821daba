use super::*;
use crate::linalg::max_abs;
use crate::qobjects::pi_state;
use crate::random::{random_box, rng};

const ACIN: &str = r#"{"kind": "unitary", "in_dim": 2, "out_dim": 2,
  "data": [[[1, 0], [0, 0]], [[0, 0], [0, 1]]]}"#;

#[test]
fn every_kind_parses() {
    let u = parse_channel(ACIN).unwrap();
    assert_eq!((u.in_dim(), u.out_dim()), (2, 2));

    let dephasing = r#"{"kind": "kraus", "in_dim": 2, "out_dim": 2, "data": [
        [[[0.7071067811865476, 0], [0, 0]], [[0, 0], [0.7071067811865476, 0]]],
        [[[0.7071067811865476, 0], [0, 0]], [[0, 0], [-0.7071067811865476, 0]]]]}"#;
    let ch = parse_channel(dephasing).unwrap();
    assert!(ch.tp_residual() < 1e-12);

    let replacer =
        r#"{"kind": "replacer", "in_dim": 3, "out_dim": 2, "data": [[[0.5, 0], [0, 0]], [[0, 0], [0.5, 0]]]}"#;
    assert_eq!(parse_channel(replacer).unwrap().in_dim(), 3);

    let cq = r#"{"kind": "cq", "in_dim": 2, "out_dim": 2, "data": [
        [[[1, 0], [0, 0]], [[0, 0], [0, 0]]],
        [[[0.5, 0], [0, 0.5]], [[0, -0.5], [0.5, 0]]]]}"#;
    assert_eq!(parse_channel(cq).unwrap().in_dim(), 2);
}

#[test]
fn box_round_trips_through_choi_form() {
    let b = random_box(2, 3, &mut rng(4));
    let text = serde_json::to_string(&BoxSpec::from_box(&b)).unwrap();
    let back = parse_box(&text).unwrap();
    assert!(max_abs(&(back.first.choi().matrix() - b.first.choi().matrix())) < 1e-15);
    assert!(max_abs(&(back.second.choi().matrix() - b.second.choi().matrix())) < 1e-15);
}

#[test]
fn states_and_cq_round_trip() {
    let (rho, sigma) = (pi_state(4.0).unwrap(), QState::maximally_mixed(2));
    let text = serde_json::to_string(&StatePairSpec::from_states(&rho, &sigma)).unwrap();
    let (r, s) = parse_state_pair(&text).unwrap();
    assert_eq!((r, s), (rho.clone(), sigma.clone()));

    let cq = CQBox::new(vec![(rho, sigma.clone()), (sigma.clone(), sigma)]).unwrap();
    let text = serde_json::to_string(&CqSpec::from_cq(&cq)).unwrap();
    assert_eq!(parse_cq(&text).unwrap(), cq);
}

#[test]
fn superchannel_round_trips() {
    let theta = Superchannel::identity(2, 3);
    let text = serde_json::to_string(&theta).unwrap();
    assert_eq!(parse_superchannel(&text).unwrap(), theta);
}

#[test]
fn syntax_errors_carry_line_and_column() {
    let err = parse_channel("{\"kind\": \"choi\",\n \"in_dim\": 2,, }").unwrap_err();
    assert_eq!(err.line, Some(2));
    assert!(err.column.is_some());
    assert!(parse_box("{} trailing").is_err());
}

#[test]
fn shape_errors_name_the_field() {
    let bad = r#"{"first": {"kind": "unitary", "in_dim": 2, "out_dim": 2, "data": [[[1, 0], [0, 0]], [[0, 0], [0, 1]]]},
                 "second": {"kind": "replacer", "in_dim": 2, "out_dim": 2, "data": [[[1, 0]]]}}"#;
    let err = parse_box(bad).unwrap_err();
    assert_eq!(err.path, "second.data");
    assert!(err.to_string().contains("2×2"), "{err}");

    let wrong_type = r#"{"kind": "choi", "in_dim": "two", "out_dim": 2, "data": []}"#;
    assert!(parse_channel(wrong_type).unwrap_err().message.contains("invalid type"));

    let kraus = r#"{"kind": "kraus", "in_dim": 2, "out_dim": 2, "data": [[[[1, 0], [0, 0]], [[0, 0], [0.5, 0]]]]}"#;
    assert_eq!(parse_channel(kraus).unwrap_err().path, "data");

    let unknown = r#"{"kind": "choi", "in_dim": 1, "out_dim": 1, "data": [[[1, 0]]], "extra": 1}"#;
    assert!(parse_channel(unknown).unwrap_err().message.contains("extra"));
}

#[test]
fn oversized_dimensions_rejected_before_allocation() {
    let huge = r#"{"kind": "replacer", "in_dim": 18446744073709551615, "out_dim": 2, "data": [[[1, 0], [0, 0]], [[0, 0], [0, 0]]]}"#;
    let err = parse_channel(huge).unwrap_err();
    assert!(err.message.contains("cap"), "{err}");
    let theta = r#"{"dims": [4294967296, 4294967296, 2, 2], "choi": [[[1, 0]]]}"#;
    assert_eq!(parse_superchannel(theta).unwrap_err().path, "dims");
}

#[test]
fn errors_inside_a_box_keep_the_field_path() {
    let bad = "{\"first\": {\"kind\": \"choi\", \"in_dim\": 2,\n \"out_dim\": \"x\", \"data\": []}, \"second\": {}}";
    let err = parse_box(bad).unwrap_err();
    assert_eq!((err.path.as_str(), err.line), ("first.out_dim", Some(2)));

    let nested = r#"{"kind": "kraus", "in_dim": 1, "out_dim": 1, "data": [[[1, "re"]]]}"#;
    assert!(parse_channel(nested).unwrap_err().path.starts_with("data[0][0]"));
}
