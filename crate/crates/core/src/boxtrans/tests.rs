use super::*;
use crate::channel_div::channel_dmin;
use crate::linalg::CMatrix;
use crate::qobjects::pi_state;
use crate::random::{ginibre, random_box, random_channel, random_cq_pairs, random_state, rng};
use crate::state_div::dmax;

fn settings() -> SolverSettings {
    SolverSettings::default()
}

fn finite(v: ExtendedReal) -> f64 {
    v.finite().expect("finite value")
}

fn heuristic() -> HeuristicSettings {
    HeuristicSettings::new(6, 11)
}

fn replacer_box(rho: &QState, sigma: &QState) -> ChannelBox {
    ChannelBox::replacer(rho, sigma, 1).unwrap()
}

fn acin() -> CMatrix {
    CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c64(1.0, 0.0), c64(0.0, 1.0)]))
}

#[test]
fn contract_adjoint_matches_trace_pairing() {
    let mut r = rng(3);
    let dims = [2, 2, 3, 2];
    let theta = ginibre(24, 24, &mut r);
    let x = ginibre(6, 6, &mut r);
    let y = ginibre(4, 4, &mut r);
    let forward = (&y * contract_superchannel(&theta, dims, &x)).trace();
    let backward = (contract_adjoint(&y, dims, &x) * &theta).trace();
    assert!((forward - backward).norm() < 1e-9, "{forward} vs {backward}");
}

#[test]
fn transform_trivial_and_replacer_family() {
    let s = settings();
    let b = random_box(2, 2, &mut rng(5));
    let same = transform_error(&b, &b, &s).unwrap();
    assert!(same.epsilon_star.abs() < 1e-6, "{}", same.epsilon_star);
    assert!(same.primal_dual_gap < 1e-6);

    for (m, k, expected) in [(2.0, 4.0, 0.5), (2.0, 8.0, 0.75), (4.0, 8.0, 0.5)] {
        let source = ChannelBox::standard(m, 1).unwrap();
        let target = ChannelBox::standard(k, 1).unwrap();
        let res = transform_error(&source, &target, &s).unwrap();
        assert!((res.epsilon_star - expected).abs() < 1e-6, "M={m} K={k}: {}", res.epsilon_star);
        let check = verify_protocol(&res.superchannel, &source, &target, &s).unwrap();
        assert!(check.second_residual < 1e-6);
        assert!(check.eps_first <= res.epsilon_star + 1e-5);
    }
}

#[test]
fn transform_error_grows_with_target_gap() {
    let s = settings();
    let source = ChannelBox::standard(2.0, 1).unwrap();
    let mut last = 0.0;
    for k in [2.0, 3.0, 5.0, 8.0] {
        let eps = transform_error(&source, &ChannelBox::standard(k, 1).unwrap(), &s).unwrap().epsilon_star;
        assert!(eps >= last - 1e-7, "K={k}: {eps} < {last}");
        last = eps;
    }
}

#[test]
fn transform_to_standard_at_dmin_is_exact() {
    let s = settings();
    let b = random_box(2, 2, &mut rng(8));
    let v = finite(channel_dmin(&b, &s).unwrap());
    let res = transform_error(&b, &ChannelBox::standard(v.exp2(), 1).unwrap(), &s).unwrap();
    assert!(res.epsilon_star < 1e-5, "{}", res.epsilon_star);
}

#[test]
fn transform_from_identical_pair_to_orthogonal_pair() {
    let n = Channel::replacer(&QState::maximally_mixed(2), 1);
    let source = ChannelBox::new(n.clone(), n).unwrap();
    let target = replacer_box(&QState::basis(2, 0), &QState::basis(2, 1));
    let res = transform_error(&source, &target, &settings()).unwrap();
    assert!((res.epsilon_star - 1.0).abs() < 1e-5, "{}", res.epsilon_star);
}

#[test]
fn distill_standard_boxes() {
    let s = settings();
    for m in [2.0, 4.0, 8.0] {
        let b = ChannelBox::standard(m, 1).unwrap();
        let res = distill_exact(&b, &s).unwrap();
        assert!((finite(res.log2_m) - m.log2()).abs() < 1e-6);
        let (source, target) = res.boxes(&b).unwrap().unwrap();
        let check = verify_protocol(res.superchannel.as_ref().unwrap(), &source, &target, &s).unwrap();
        assert!(check.eps_first < 1e-6 && check.second_residual < 1e-6, "{check:?}");
    }
}

#[test]
fn distill_identical_and_random() {
    let s = settings();
    let n = random_channel(2, 2, 2, &mut rng(12));
    let same = distill_exact(&ChannelBox::new(n.clone(), n).unwrap(), &s).unwrap();
    assert!(finite(same.log2_m).abs() < 1e-6);

    for seed in 0..3 {
        let b = random_box(2, 2, &mut rng(100 + seed));
        let res = distill_exact(&b, &s).unwrap();
        let sdp = finite(channel_dmin_eps(&b, 0.0, &s).unwrap().report.value);
        assert!((finite(res.log2_m) - sdp).abs() < 1e-6);
        let (source, target) = res.boxes(&b).unwrap().unwrap();
        let check = verify_protocol(res.superchannel.as_ref().unwrap(), &source, &target, &s).unwrap();
        assert!(check.eps_first < 1e-6 && check.second_residual < 1e-6, "seed {seed}: {check:?}");
    }
}

#[test]
fn distill_distinguishable_is_sentinel() {
    let b = replacer_box(&QState::basis(2, 0), &QState::basis(2, 1));
    let res = distill_exact(&b, &settings()).unwrap();
    assert_eq!(res.log2_m, ExtendedReal::Infinite);
    assert!(res.superchannel.is_none());
    assert!(res.boxes(&b).unwrap().is_none());
}

#[test]
fn distill_eps_examples() {
    let s = settings();
    let b = ChannelBox::standard(2.0, 1).unwrap();
    let half = distill_eps(&b, 0.5, &s).unwrap();
    assert!((finite(half.log2_m) - 2.0).abs() < 1e-6, "{:?}", half.log2_m);
    let (source, target) = half.boxes(&b).unwrap().unwrap();
    let check = verify_protocol(half.superchannel.as_ref().unwrap(), &source, &target, &s).unwrap();
    assert!(check.eps_first <= 0.5 + 1e-5 && check.second_residual < 1e-6, "{check:?}");

    for seed in 0..3 {
        let b = random_box(2, 2, &mut rng(200 + seed));
        let exact = finite(distill_exact(&b, &s).unwrap().log2_m);
        let res = distill_eps(&b, 0.1, &s).unwrap();
        assert!(finite(res.log2_m) >= exact - 1e-6);
        let (source, target) = res.boxes(&b).unwrap().unwrap();
        let check = verify_protocol(res.superchannel.as_ref().unwrap(), &source, &target, &s).unwrap();
        assert!(check.eps_first <= 0.1 + 1e-5 && check.second_residual < 1e-6, "seed {seed}: {check:?}");
    }
}

#[test]
fn dilute_exact_examples() {
    let s = settings();
    let n = random_channel(2, 2, 2, &mut rng(21));
    let same = dilute_exact(&ChannelBox::new(n.clone(), n).unwrap()).unwrap();
    assert!(finite(same.log2_m).abs() < 1e-9);

    let mut r = rng(22);
    let (rho, sigma) = (random_state(2, &mut r), random_state(2, &mut r));
    let b = replacer_box(&rho, &sigma);
    let res = dilute_exact(&b).unwrap();
    assert!((finite(res.log2_m) - finite(dmax(&rho, &sigma).unwrap())).abs() < 1e-8);
    let theta = res.superchannel.as_ref().unwrap();
    let (source, target) = res.boxes(&b).unwrap().unwrap();
    let k = apply_superchannel(theta, &source.first).unwrap();
    let l = apply_superchannel(theta, &source.second).unwrap();
    assert!(max_abs(&(k.choi().matrix() - target.first.choi().matrix())) < 1e-8);
    assert!(max_abs(&(l.choi().matrix() - target.second.choi().matrix())) < 1e-8);
    let check = verify_protocol(theta, &source, &target, &s).unwrap();
    assert!(check.eps_first < 1e-6 && check.second_residual < 1e-6);

    let support = replacer_box(&QState::basis(2, 0), &QState::basis(2, 1));
    assert!(matches!(dilute_exact(&support), Err(Error::Infeasible(_))));
}

#[test]
fn dilution_mixture_identity() {
    for seed in 0..5 {
        let b = random_box(2, 2, &mut rng(300 + seed));
        let lambda = finite(channel_dmax(&b).unwrap());
        let n_prime = dilution_complement(&b.first, &b.second, lambda).unwrap();
        assert!(n_prime.cp_residual() <= 1e-8);
        let w = (-lambda).exp2();
        let mix = b.first.choi().matrix().scale(w) + n_prime.choi().matrix().scale(1.0 - w);
        assert!(max_abs(&(mix - b.second.choi().matrix())) < 1e-9);
    }
}

#[test]
fn dilute_eps_examples() {
    let s = settings();
    let n = random_channel(2, 2, 2, &mut rng(31));
    let same = dilute_eps(&ChannelBox::new(n.clone(), n).unwrap(), 0.2, &s).unwrap();
    assert!(finite(same.log2_m) < 1e-6);

    for seed in 0..3 {
        let b = random_box(2, 2, &mut rng(400 + seed));
        let exact = finite(dilute_exact(&b).unwrap().log2_m);
        let res = dilute_eps(&b, 0.1, &s).unwrap();
        assert!(finite(res.log2_m) <= exact + 1e-6);
        let (source, target) = res.boxes(&b).unwrap().unwrap();
        let check = verify_protocol(res.superchannel.as_ref().unwrap(), &source, &target, &s).unwrap();
        assert!(check.eps_first <= 0.1 + 1e-5 && check.second_residual < 1e-6, "seed {seed}: {check:?}");
    }
}

#[test]
fn verify_protocol_examples() {
    let s = settings();
    let b = random_box(2, 2, &mut rng(41));
    let id = Superchannel::identity(2, 2);
    let check = verify_protocol(&id, &b, &b, &s).unwrap();
    assert!(check.eps_first < 1e-7 && check.second_residual < 1e-7);

    // dilution protocol of (M, N) used for (N, M)
    let sep = replacer_box(&QState::diagonal(&[0.95, 0.05]).unwrap(), &QState::diagonal(&[0.05, 0.95]).unwrap());
    let swapped = ChannelBox::new(sep.second.clone(), sep.first.clone()).unwrap();
    let wrong = dilute_exact(&swapped).unwrap();
    let standard = ChannelBox::standard(finite(wrong.log2_m).exp2(), 1).unwrap();
    let check = verify_protocol(wrong.superchannel.as_ref().unwrap(), &standard, &sep, &s).unwrap();
    assert!(check.eps_first >= 0.3, "{check:?}");

    assert!(verify_protocol(&id, &b, &ChannelBox::standard(2.0, 1).unwrap(), &s).is_err());
}

#[test]
fn tensor_power_examples() {
    let b = random_box(2, 2, &mut rng(51));
    let one = tensor_power_box(&b, 1, DEFAULT_CHOI_DIM_CAP).unwrap();
    assert_eq!(one, b);
    let two = tensor_power_box(&b, 2, DEFAULT_CHOI_DIM_CAP).unwrap();
    let single = finite(channel_dmax(&b).unwrap());
    assert!((finite(channel_dmax(&two).unwrap()) - 2.0 * single).abs() < 1e-6);
    assert!(matches!(tensor_power_box(&b, 5, DEFAULT_CHOI_DIM_CAP), Err(Error::DimensionCap { dim: 1024, cap: 256 })));
    assert!(tensor_power_box(&b, 0, DEFAULT_CHOI_DIM_CAP).is_err());

    let acin_box = ChannelBox::new(Channel::identity(2), Channel::unitary(&acin()).unwrap()).unwrap();
    assert!(finite(channel_dmin(&acin_box, &settings()).unwrap()) < 1.0 + 1e-6);
    let square = tensor_power_box(&acin_box, 2, DEFAULT_CHOI_DIM_CAP).unwrap();
    let v = channel_dmin(&square, &settings()).unwrap();
    assert!(!v.is_finite() || v.value() > 30.0, "{v:?}");
}

#[test]
fn standard_degrade_maps_pi_states() {
    for (m, k) in [(8.0f64, 2.0f64), (4.0, 4.0), (4.0, 1.0)] {
        let theta = standard_degrade(m.log2(), k.log2()).unwrap();
        let from = ChannelBox::standard(m, 1).unwrap();
        let to = ChannelBox::standard(k, 1).unwrap();
        for (src, dst) in [(&from.first, &to.first), (&from.second, &to.second)] {
            let out = apply_superchannel(&theta, src).unwrap();
            assert!(max_abs(&(out.choi().matrix() - dst.choi().matrix())) < 1e-12);
        }
    }
    assert!(standard_degrade(1.0, 2.0).is_err());
}

#[test]
fn two_step_within_budget() {
    let s = settings();
    let mut r = rng(61);
    let source = ChannelBox::standard(8.0, 1).unwrap();
    let target = random_box(2, 2, &mut r);
    let res = two_step(&source, &target, 0.05, 0.05, &s).unwrap();
    let achieved = res.achieved.expect("three distilled bits cover the cost");
    assert!(achieved.eps_first <= 0.1 + 1e-4, "{achieved:?}");
    assert!(achieved.second_residual < 1e-5);
    let direct = transform_error(&source, &target, &s).unwrap();
    assert!(direct.epsilon_star <= achieved.eps_first + 1e-5);
}

#[test]
fn protocol_serialization_replays() {
    let s = settings();
    let b = random_box(2, 2, &mut rng(71));
    let res = dilute_exact(&b).unwrap();
    let json = serde_json::to_string(&res).unwrap();
    assert!(json.contains("\"log2M\""));
    let back: ProtocolResult = serde_json::from_str(&json).unwrap();
    let (source, target) = res.boxes(&b).unwrap().unwrap();
    let a = verify_protocol(res.superchannel.as_ref().unwrap(), &source, &target, &s).unwrap();
    let c = verify_protocol(back.superchannel.as_ref().unwrap(), &source, &target, &s).unwrap();
    assert!((a.eps_first - c.eps_first).abs() < 1e-8 && (a.second_residual - c.second_residual).abs() < 1e-8);
}

#[test]
fn bound_report_serializes_infinities() {
    let r = BoundReport::new("x", 1.0, f64::INFINITY, Assurance::Certified);
    let json = serde_json::to_string(&r).unwrap();
    assert!(json.contains("\"+inf\""), "{json}");
    let back: BoundReport = serde_json::from_str(&json).unwrap();
    assert_eq!(back, r);
}

#[test]
fn smooth_min_max_bound_examples() {
    let s = settings();
    let n = random_channel(2, 2, 2, &mut rng(81));
    let same = bound_smooth_min_max(&ChannelBox::new(n.clone(), n).unwrap(), 0.1, 0.2, &s).unwrap();
    assert!(same.passes && (same.lhs + 0.9f64.log2()).abs() < 1e-6, "{same:?}");
    let standard = bound_smooth_min_max(&ChannelBox::standard(2.0, 1).unwrap(), 0.1, 0.1, &s).unwrap();
    assert!(standard.passes, "{standard:?}");
    assert_eq!(standard.assurance, Assurance::Certified);
    for seed in 0..4 {
        let r = bound_smooth_min_max(&random_box(2, 2, &mut rng(500 + seed)), 0.1, 0.1, &s).unwrap();
        assert!(r.passes, "{r:?}");
    }
    assert!(bound_smooth_min_max(&ChannelBox::standard(2.0, 1).unwrap(), 0.5, 0.5, &s).is_err());
}

#[test]
fn pseudo_continuity_examples() {
    let s = settings();
    let h = heuristic();
    let mut r = rng(91);
    let (n0, n1, m) =
        (random_channel(2, 2, 2, &mut r), random_channel(2, 2, 2, &mut r), random_box(2, 2, &mut r).second);
    for kind in [RenyiKind::Sandwiched, RenyiKind::Petz] {
        let same = bound_pseudo_continuity(kind, 0.75, &n0, &n0, &m, &s, &h).unwrap();
        assert!(same.passes, "{same:?}");
        let rep = bound_pseudo_continuity(kind, 0.75, &n0, &n1, &m, &s, &h).unwrap();
        assert!(rep.slack >= -HEURISTIC_BOUND_TOL, "{rep:?}");
        assert_eq!(rep.assurance, Assurance::ConsistencyCheck);
    }
    let (a, b, c) = (random_state(2, &mut r), random_state(2, &mut r), random_state(2, &mut r));
    let (ra, rb, rc) = (Channel::replacer(&a, 1), Channel::replacer(&b, 1), Channel::replacer(&c, 1));
    let exact = bound_pseudo_continuity(RenyiKind::Sandwiched, 0.6, &ra, &rb, &rc, &s, &h).unwrap();
    assert!(exact.passes && exact.assurance == Assurance::Certified, "{exact:?}");
    assert!(bound_pseudo_continuity(RenyiKind::Sandwiched, 0.4, &ra, &rb, &rc, &s, &h).is_err());
    let pure = Channel::replacer(&QState::basis(2, 1), 1);
    let sharp = Channel::replacer(&QState::basis(2, 0), 1);
    assert!(bound_pseudo_continuity(RenyiKind::Petz, 0.5, &pure, &ra, &sharp, &s, &h).is_err());
}

#[test]
fn smooth_dmax_lower_examples() {
    let s = settings();
    let h = heuristic();
    let mut r = rng(101);
    let (rho, sigma) = (random_state(2, &mut r), random_state(2, &mut r));
    let b = replacer_box(&rho, &sigma);
    for (kind, alpha) in [(RenyiKind::Sandwiched, 0.75), (RenyiKind::Petz, 0.5), (RenyiKind::Petz, 0.0)] {
        let rep = bound_smooth_dmax_lower(&b, alpha, 0.1, kind, &s, &h).unwrap();
        assert!(rep.passes && rep.assurance == Assurance::Certified, "{kind:?} {alpha}: {rep:?}");
    }
    let rb = random_box(2, 2, &mut r);
    let rep = bound_smooth_dmax_lower(&rb, 0.75, 0.1, RenyiKind::Sandwiched, &s, &h).unwrap();
    assert!(rep.slack >= -HEURISTIC_BOUND_TOL, "{rep:?}");
    let zero = bound_smooth_dmax_lower(&rb, 0.75, 0.0, RenyiKind::Sandwiched, &s, &h).unwrap();
    assert!(zero.passes, "{zero:?}");
    assert!(bound_smooth_dmax_lower(&rb, 0.25, 0.1, RenyiKind::Sandwiched, &s, &h).is_err());
}

#[test]
fn cq_upper_bound_examples() {
    let s = settings();
    let mut r = rng(111);
    let single = CQBox::new(vec![(random_state(2, &mut r), random_state(2, &mut r))]).unwrap();
    assert!(bound_cq_smooth_dmax_upper(&single, 2.0, 0.2, &s).unwrap().passes);
    let diag = CQBox::new(vec![
        (QState::diagonal(&[0.7, 0.3]).unwrap(), QState::diagonal(&[0.4, 0.6]).unwrap()),
        (QState::diagonal(&[0.2, 0.8]).unwrap(), QState::diagonal(&[0.5, 0.5]).unwrap()),
    ])
    .unwrap();
    assert!(bound_cq_smooth_dmax_upper(&diag, 1.5, 0.1, &s).unwrap().passes);
    let three = CQBox::new(random_cq_pairs(3, 2, &mut r)).unwrap();
    let rep = bound_cq_smooth_dmax_upper(&three, 2.0, 0.2, &s).unwrap();
    assert!(rep.passes, "{rep:?}");
    assert!(bound_cq_smooth_dmax_upper(&three, 0.5, 0.2, &s).is_err());
    assert!(bound_cq_smooth_dmax_upper(&three, 2.0, 0.0, &s).is_err());
}

#[test]
fn parallel_converse_examples() {
    let h = heuristic();
    let mut r = rng(121);
    let source = CQBox::new(random_cq_pairs(2, 2, &mut r)).unwrap().to_box();
    let same =
        bound_parallel_converse(&source, &source, 2, 2, 0.0, RenyiKind::Sandwiched, 0.75, DEFAULT_CHOI_DIM_CAP, &h)
            .unwrap();
    assert!(same.passes && same.assurance == Assurance::Certified, "{same:?}");

    let (rho, sigma) = (pi_state(2.0).unwrap(), QState::maximally_mixed(2));
    let weak = replacer_box(&QState::diagonal(&[0.6, 0.4]).unwrap(), &sigma);
    let strong = replacer_box(&QState::basis(2, 0), &rho);
    // many copies of a weak box cannot become as many copies of a strong one
    let claim =
        bound_parallel_converse(&weak, &strong, 4, 4, 0.01, RenyiKind::Sandwiched, 0.75, DEFAULT_CHOI_DIM_CAP, &h)
            .unwrap();
    assert!(!claim.passes, "{claim:?}");

    let general = random_box(2, 2, &mut r);
    let rep =
        bound_parallel_converse(&general, &general, 1, 1, 0.0, RenyiKind::Petz, 0.6, DEFAULT_CHOI_DIM_CAP, &h).unwrap();
    assert_eq!(rep.assurance, Assurance::ConsistencyCheck);
    assert!(rep.slack >= -HEURISTIC_BOUND_TOL, "{rep:?}");
    assert!(
        bound_parallel_converse(&general, &general, 5, 1, 0.0, RenyiKind::Petz, 0.6, DEFAULT_CHOI_DIM_CAP, &h).is_err()
    );

    let n = random_channel(2, 2, 2, &mut r);
    let trivial = ChannelBox::new(n.clone(), n).unwrap();
    assert!(
        bound_parallel_converse(&general, &trivial, 1, 1, 0.0, RenyiKind::Petz, 0.6, DEFAULT_CHOI_DIM_CAP, &h).is_err()
    );
}
