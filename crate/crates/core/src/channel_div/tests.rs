use super::*;
use crate::linalg::{kron_matrix, CMatrix};
use crate::qobjects::{pi_state, trivial_env_realization, SeizeData};
use crate::random::{random_box, random_channel, random_cq_pairs, random_state, random_vector, rng};
use crate::state_div::{rel_entropy, trace_distance};

fn settings() -> SolverSettings {
    SolverSettings::default()
}

fn finite(v: ExtendedReal) -> f64 {
    v.finite().expect("finite value")
}

fn diag_unitary(phases: &[C64]) -> CMatrix {
    let d = phases.len();
    CMatrix::from_fn(d, d, |i, j| if i == j { phases[i] } else { c64(0.0, 0.0) })
}

fn pauli_x() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c64(0.0, 0.0), c64(1.0, 0.0), c64(1.0, 0.0), c64(0.0, 0.0)])
}

fn acin() -> CMatrix {
    diag_unitary(&[c64(1.0, 0.0), c64(0.0, 1.0)])
}

fn sdp_gap(report: &DivergenceReport) -> f64 {
    report.gap.expect("SDP gap")
}

#[test]
fn diamond_examples() {
    let s = settings();
    let mut r = rng(1);
    let n = random_channel(2, 2, 2, &mut r);
    assert!(finite(diamond_distance(&n, &n, &s).unwrap().value).abs() < 1e-9);

    let id = Channel::identity(2);
    let x = Channel::unitary(&pauli_x()).unwrap();
    assert!((finite(diamond_distance(&id, &x, &s).unwrap().value) - 1.0).abs() < 1e-7);

    let (rho, sigma) = (random_state(2, &mut r), random_state(2, &mut r));
    let b = ChannelBox::replacer(&rho, &sigma, 2).unwrap();
    let report = diamond_distance(&b.first, &b.second, &s).unwrap();
    let expected = trace_distance(&rho, &sigma).unwrap();
    assert!((finite(report.value) - expected).abs() < 1e-7);
    // brute force over pure qubit inputs with the Helstrom measurement
    let mut best: f64 = 0.0;
    for _ in 0..200 {
        let psi = random_vector(4, &mut r);
        best = best.max(finite(channel_div_at_input(Divergence::Trace, &b, &psi).unwrap()));
    }
    assert!((best - expected).abs() < 1e-9);
}

#[test]
fn diamond_primal_dual_agree_and_metric() {
    let s = settings();
    let mut r = rng(2);
    let chans: Vec<Channel> = (0..3).map(|k| random_channel(2, 2, 1 + k, &mut r)).collect();
    let d = |a: &Channel, b: &Channel| diamond_distance(a, b, &s).unwrap();
    let ab = d(&chans[0], &chans[1]);
    assert!(sdp_gap(&ab) <= 1e-6 * (1.0 + finite(ab.value)));
    let ba = d(&chans[1], &chans[0]);
    assert!((finite(ab.value) - finite(ba.value)).abs() < 1e-8);
    let bc = d(&chans[1], &chans[2]);
    let ac = d(&chans[0], &chans[2]);
    assert!(finite(ab.value) + finite(bc.value) - finite(ac.value) >= -1e-7);
}

#[test]
fn channel_dmax_examples() {
    let mut r = rng(3);
    let n = random_channel(2, 2, 4, &mut r);
    let same = ChannelBox::new(n.clone(), n).unwrap();
    assert!(finite(channel_dmax(&same).unwrap()).abs() < 1e-9);

    let (rho, sigma) = (random_state(2, &mut r), random_state(2, &mut r));
    let b = ChannelBox::replacer(&rho, &sigma, 2).unwrap();
    let expected = finite(crate::state_div::dmax(&rho, &sigma).unwrap());
    assert!((finite(channel_dmax(&b).unwrap()) - expected).abs() < 1e-9);

    let cq = CQBox::new(random_cq_pairs(3, 2, &mut r)).unwrap();
    let per_symbol = finite(cq_divergence(&cq, Divergence::Dmax).unwrap());
    assert!((finite(channel_dmax(&cq.to_box()).unwrap()) - per_symbol).abs() < 1e-9);
}

#[test]
fn dmin_eps_examples() {
    let s = settings();
    for m in [2.0, 4.0, 8.0] {
        let b = ChannelBox::standard(m, 1).unwrap();
        let report = channel_dmin_eps(&b, 0.0, &s).unwrap();
        assert!((finite(report.report.value) - m.log2()).abs() < 1e-6);
    }
    let mut r = rng(4);
    let n = random_channel(2, 2, 2, &mut r);
    let same = ChannelBox::new(n.clone(), n).unwrap();
    assert!(finite(channel_dmin(&same, &s).unwrap()).abs() < 1e-6);

    let b = ChannelBox::new(Channel::identity(2), Channel::unitary(&acin()).unwrap()).unwrap();
    let result = channel_dmin_eps(&b, 0.0, &s).unwrap();
    assert!((finite(result.report.value) - 1.0).abs() < 1e-6);
    assert!((result.input_marginal.trace() - 1.0).abs() < 1e-6);
    // brute force: min over pure ψ of |⟨ψ|(I ⊗ U)|ψ⟩|²
    let lifted = kron_matrix(&CMatrix::identity(2, 2), &acin());
    let mut overlap: f64 = 1.0;
    for _ in 0..4000 {
        let v = CMatrix::from_column_slice(4, 1, &random_vector(4, &mut r));
        overlap = overlap.min((v.adjoint() * &lifted * &v)[(0, 0)].norm_sqr());
    }
    assert!((-overlap.log2() - 1.0).abs() < 2e-2);
}

#[test]
fn unitary_dmin_examples() {
    assert!(finite(unitary_dmin(&CMatrix::identity(2, 2)).unwrap()).abs() < 1e-12);
    assert!((finite(unitary_dmin(&acin()).unwrap()) - 1.0).abs() < 1e-9);
    assert_eq!(unitary_dmin(&kron_matrix(&acin(), &acin())).unwrap(), ExtendedReal::Infinite);
    assert_eq!(unitary_dmin(&pauli_x()).unwrap(), ExtendedReal::Infinite);
    assert!(unitary_dmin(&(CMatrix::identity(2, 2) * c64(1.1, 0.0))).is_err());
}

#[test]
fn hull_distance_cases() {
    assert!((origin_hull_distance(&[(1.0, 0.0)]) - 1.0).abs() < 1e-15);
    assert!((origin_hull_distance(&[(1.0, 0.0), (0.0, 1.0)]) - 0.5f64.sqrt()).abs() < 1e-15);
    assert!(origin_hull_distance(&[(1.0, 0.0), (-1.0, 0.0)]) < 1e-15);
    assert!(origin_hull_distance(&[(1.0, 0.0), (-0.5, 0.8), (-0.5, -0.8)]) == 0.0);
    let far = origin_hull_distance(&[(2.0, 0.0), (3.0, 1.0), (3.0, -1.0), (2.5, 0.0)]);
    assert!((far - 2.0).abs() < 1e-15);
}

#[test]
fn dmax_eps_examples() {
    let s = settings();
    let mut r = rng(5);
    let b = random_box(2, 2, &mut r);
    let exact = finite(channel_dmax(&b).unwrap());
    let at_zero = channel_dmax_eps(&b, 0.0, &s).unwrap();
    assert!((finite(at_zero.report.value) - exact).abs() < 1e-6);

    let n = random_channel(2, 2, 2, &mut r);
    let same = ChannelBox::new(n.clone(), n).unwrap();
    assert!(finite(channel_dmax_eps(&same, 0.2, &s).unwrap().report.value).abs() < 1e-6);

    let smooth = channel_dmax_eps(&b, 0.1, &s).unwrap();
    let value = finite(smooth.report.value);
    let tilde = smooth.smoothed.unwrap();
    let distance = finite(diamond_distance(&tilde, &b.first, &s).unwrap().value);
    assert!(distance <= 0.1 + 1e-5, "{distance}");
    let achieved = finite(channel_dmax(&ChannelBox::new(tilde, b.second.clone()).unwrap()).unwrap());
    assert!((achieved - value).abs() < 1e-5, "{achieved} vs {value}");
}

#[test]
fn support_violation_gives_infinite_dmax_eps() {
    let s = settings();
    let b = ChannelBox::replacer(&QState::basis(2, 0), &QState::basis(2, 1), 1).unwrap();
    assert_eq!(channel_dmax_eps(&b, 0.0, &s).unwrap().report.value, ExtendedReal::Infinite);
    assert_eq!(channel_dmin(&b, &s).unwrap(), ExtendedReal::Infinite);
}

#[test]
fn smooth_programs_have_small_gaps() {
    let s = settings();
    let mut r = rng(6);
    for _ in 0..3 {
        let b = random_box(2, 2, &mut r);
        for eps in [0.0, 0.1] {
            let lo = channel_dmin_eps(&b, eps, &s).unwrap().report;
            let c = match &lo.certificate {
                Certificate::Sdp(c) => c.clone(),
                other => panic!("{other:?}"),
            };
            assert!(sdp_gap(&lo) <= 1e-6 * (1.0 + c.primal_objective.abs()));
            let hi = channel_dmax_eps(&b, eps, &s).unwrap().report;
            let c = match &hi.certificate {
                Certificate::Sdp(c) => c.clone(),
                other => panic!("{other:?}"),
            };
            assert!(sdp_gap(&hi) <= 1e-6 * (1.0 + c.primal_objective.abs()));
        }
    }
}

#[test]
fn heuristic_examples() {
    let mut r = rng(7);
    let (rho, sigma) = (random_state(2, &mut r), random_state(2, &mut r));
    let b = ChannelBox::replacer(&rho, &sigma, 2).unwrap();
    let report = channel_div_heuristic(Divergence::Relative, &b, &HeuristicSettings::new(3, 1)).unwrap();
    assert!((finite(report.value) - finite(rel_entropy(&rho, &sigma).unwrap())).abs() < 1e-9);
    assert!(report.best_input().is_some());

    let b = random_box(2, 2, &mut r);
    let report = channel_div_heuristic(Divergence::Dmax, &b, &HeuristicSettings::new(4, 2)).unwrap();
    assert!((finite(report.value) - finite(channel_dmax(&b).unwrap())).abs() < 1e-5);

    let cq = CQBox::new(random_cq_pairs(3, 2, &mut r)).unwrap();
    let report = channel_div_heuristic(Divergence::Relative, &cq.to_box(), &HeuristicSettings::new(8, 3)).unwrap();
    let closed = finite(cq_divergence(&cq, Divergence::Relative).unwrap());
    assert!((finite(report.value) - closed).abs() < 1e-4, "{:?} vs {closed}", report.value);
}

#[test]
fn heuristic_is_deterministic() {
    let mut r = rng(8);
    let b = random_box(2, 2, &mut r);
    let settings = HeuristicSettings::new(4, 99);
    let a = channel_div_heuristic(Divergence::Petz(0.5), &b, &settings).unwrap();
    let c = channel_div_heuristic(Divergence::Petz(0.5), &b, &settings).unwrap();
    assert_eq!(a, c);
}

#[test]
fn heuristic_below_sdp_values() {
    let s = settings();
    let mut r = rng(9);
    let b = random_box(2, 2, &mut r);
    let h = HeuristicSettings::new(4, 5);
    let dmin_h = finite(channel_div_heuristic(Divergence::Dmin, &b, &h).unwrap().value);
    assert!(dmin_h <= finite(channel_dmin(&b, &s).unwrap()) + 1e-6);
    let trace_h = finite(channel_div_heuristic(Divergence::Trace, &b, &h).unwrap().value);
    assert!(trace_h <= finite(diamond_distance(&b.first, &b.second, &s).unwrap().value) + 1e-6);
}

#[test]
fn fidelity_heuristic_examples() {
    let h = HeuristicSettings::new(6, 11);
    let mut r = rng(10);
    let n = random_channel(2, 2, 2, &mut r);
    assert!((channel_fidelity_heuristic(&n, &n, &h).unwrap() - 1.0).abs() < 1e-9);
    let id = Channel::identity(2);
    let x = Channel::unitary(&pauli_x()).unwrap();
    assert!(channel_fidelity_heuristic(&id, &x, &h).unwrap() < 1e-6);
    let u = Channel::unitary(&acin()).unwrap();
    assert!((channel_fidelity_heuristic(&id, &u, &h).unwrap() - 0.5).abs() < 1e-6);
}

#[test]
fn cq_divergence_examples() {
    let s = settings();
    let mut r = rng(11);
    let pairs = random_cq_pairs(1, 2, &mut r);
    let single = CQBox::new(pairs.clone()).unwrap();
    let direct = finite(rel_entropy(&pairs[0].0, &pairs[0].1).unwrap());
    assert!((finite(cq_divergence(&single, Divergence::Relative).unwrap()) - direct).abs() < 1e-12);

    let cq = CQBox::new(random_cq_pairs(3, 2, &mut r)).unwrap();
    let b = cq.to_box();
    let sdp = finite(diamond_distance(&b.first, &b.second, &s).unwrap().value);
    assert!((finite(cq_divergence(&cq, Divergence::Trace).unwrap()) - sdp).abs() < 1e-6);
    let recognized = b.as_cq(1e-12).unwrap();
    assert_eq!(recognized.symbols(), 3);
}

#[test]
fn env_seizable_examples() {
    let s = settings();
    let mut r = rng(12);
    let rho = crate::random::random_state_rank(2, 1, &mut r);
    let sigma = random_state(2, &mut r);
    // interaction ω ⊗ ζ ↦ Tr[ω] ζ, decoder Tr_R
    let interaction =
        Channel::from_choi(kron_matrix(&CMatrix::identity(2, 2), crate::linalg::gamma_operator(2).matrix()), 4, 2)
            .unwrap();
    let decoder =
        Channel::from_choi(kron_matrix(&CMatrix::identity(2, 2), crate::linalg::gamma_operator(2).matrix()), 4, 2)
            .unwrap();
    let seize = SeizeData { input: QState::max_entangled(2), decoder };
    let e = EnvBox::new(interaction, rho.clone(), sigma.clone(), Some(seize)).unwrap();
    let realized = crate::qobjects::env_realize(&e).unwrap();
    let via_state = finite(env_seizable_divergence(&e, Divergence::Relative).unwrap());
    assert!((via_state - finite(rel_entropy(&rho, &sigma).unwrap())).abs() < 1e-12);
    let dmax_state = finite(env_seizable_divergence(&e, Divergence::Dmax).unwrap());
    assert!((dmax_state - finite(channel_dmax(&realized).unwrap())).abs() < 1e-6);
    let dmin_state = finite(env_seizable_divergence(&e, Divergence::Dmin).unwrap());
    assert!((dmin_state - finite(channel_dmin(&realized, &s).unwrap())).abs() < 1e-6);

    let unseizable = trivial_env_realization(&realized).unwrap();
    assert!(env_seizable_divergence(&unseizable, Divergence::Dmax).is_err());
}

#[test]
fn smoothing_limit_examples() {
    let s = settings();
    let grid = [1e-1, 1e-2, 1e-3, 1e-4];
    let mut r = rng(13);
    let n = random_channel(2, 2, 2, &mut r);
    let same = ChannelBox::new(n.clone(), n).unwrap();
    let table = smoothing_limit_check(&same, &grid, &s).unwrap();
    assert!(table.passes);
    assert!(table.rows.iter().all(|row| finite(row.dmax_eps).abs() < 1e-6));

    let b = ChannelBox::replacer(&QState::basis(2, 0), &pi_state(2.0).unwrap(), 1).unwrap();
    let table = smoothing_limit_check(&b, &grid, &s).unwrap();
    assert!(table.passes, "{table:?}");
    assert!((finite(table.rows[3].dmin_eps) - 1.0).abs() < 1e-3);

    assert!(smoothing_limit_check(&b, &[0.1, 0.2], &s).is_err());
}

#[test]
fn unsmoothed_max_matches_closed_form_when_ill_conditioned() {
    let sigma = QState::from_matrix(CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
        c64(1.0 - 1e-4, 0.0),
        c64(1e-4, 0.0),
    ])))
    .unwrap();
    let rho = QState::pure(&[c64(0.6, 0.0), c64(0.0, 0.8)]).unwrap();
    let b = ChannelBox::replacer(&rho, &sigma, 2).unwrap();
    let sdp = channel_dmax_eps(&b, 0.0, &settings()).unwrap();
    assert!((finite(sdp.report.value) - finite(channel_dmax(&b).unwrap())).abs() < 1e-8);
    assert_eq!(sdp.smoothed, Some(b.first.clone()));
}

#[test]
fn near_product_inputs_keep_finite_values() {
    // Ascent on cq boxes drifts to classical inputs with residual reference
    // weight near the support cutoff.
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let plus = QState::pure(&[c64(h, 0.0), c64(h, 0.0)]).unwrap();
    let skewed =
        QState::from_matrix(CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c64(0.95, 0.0), c64(0.05, 0.0)])))
            .unwrap();
    let cq = CQBox::new(vec![(plus.clone(), skewed.clone()), (plus.clone(), skewed.clone()), (plus, skewed)]).unwrap();
    let stray = 2e-9f64.sqrt();
    let mut psi = vec![c64(0.0, 0.0); 9];
    psi[4] = c64(1.0, 0.0);
    psi[0] = c64(stray, 0.0);
    psi[8] = c64(stray, 0.0);
    let v = channel_div_at_input(Divergence::Relative, &cq.to_box(), &psi).unwrap();
    assert!(v.is_finite(), "{v:?}");
}
