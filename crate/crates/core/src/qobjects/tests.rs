use super::*;
use crate::linalg::{c64, gamma_vector, kron_matrix, max_abs, partial_trace};
use crate::random::{random_channel, random_state, random_superchannel, rng};

fn assert_close(a: &CMatrix, b: &CMatrix, tol: f64) {
    let diff = max_abs(&(a - b));
    assert!(diff <= tol, "matrices differ by {diff:.3e}");
}

fn pauli_x() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ZERO, c64(1.0, 0.0), c64(1.0, 0.0), ZERO])
}

fn ket_bra(d: usize, i: usize, j: usize) -> CMatrix {
    let mut m = CMatrix::zeros(d, d);
    m[(i, j)] = c64(1.0, 0.0);
    m
}

fn vector_projector(v: &[C]) -> CMatrix {
    let col = CMatrix::from_column_slice(v.len(), 1, v);
    &col * col.adjoint()
}

#[test]
fn identity_kraus_gives_gamma() {
    let ch = Channel::from_kraus(&[CMatrix::identity(2, 2)], 2, 2).unwrap();
    assert_close(ch.choi().matrix(), &vector_projector(&gamma_vector(2)), 1e-14);
    assert!((ch.choi().trace() - 2.0).abs() < 1e-14);
    assert_eq!(crate::linalg::rank(ch.choi(), 1e-10), 1);
}

#[test]
fn reset_kraus_gives_replacer_choi() {
    let ch = Channel::from_kraus(&[ket_bra(2, 0, 0), ket_bra(2, 0, 1)], 2, 2).unwrap();
    let expected = kron_matrix(&CMatrix::identity(2, 2), &ket_bra(2, 0, 0));
    assert_close(ch.choi().matrix(), &expected, 1e-14);
}

#[test]
fn pauli_x_choi() {
    let ch = Channel::unitary(&pauli_x()).unwrap();
    // (I ⊗ X)|Γ⟩ = |01⟩ + |10⟩
    let v = [ZERO, c64(1.0, 0.0), c64(1.0, 0.0), ZERO];
    assert_close(ch.choi().matrix(), &vector_projector(&v), 1e-14);
}

#[test]
fn non_trace_preserving_kraus_rejected() {
    let k = CMatrix::identity(2, 2) * c64(0.9, 0.0);
    assert!(matches!(Channel::from_kraus(&[k], 2, 2), Err(Error::InvalidChannel(_))));
}

#[test]
fn apply_identity_and_replacer() {
    let mut r = rng(1);
    let rho = random_state(4, &mut r).with_dims(vec![2, 2]).unwrap();
    let out = apply_channel(&Channel::identity(2), &rho).unwrap();
    assert_close(out.matrix(), rho.matrix(), 1e-12);

    let sigma = random_state(3, &mut r);
    let out = apply_channel(&Channel::replacer(&sigma, 2), &rho).unwrap();
    let marginal = partial_trace(rho.density(), &[0]).unwrap();
    assert_close(out.matrix(), &kron_matrix(marginal.matrix(), sigma.matrix()), 1e-12);
    assert_eq!(out.density().dims(), &[2, 3]);
}

#[test]
fn choi_state_is_output_on_phi() {
    let mut r = rng(2);
    let ch = random_channel(2, 3, 2, &mut r);
    let phi = QState::max_entangled(2);
    let out = apply_channel(&ch, &phi).unwrap();
    assert_close(out.matrix(), ch.choi_state().matrix(), 1e-12);
    assert!((out.density().trace() - 1.0).abs() < 1e-9);
}

#[test]
fn kraus_action_matches_direct_sum() {
    let mut r = rng(3);
    for _ in 0..5 {
        let kraus: Vec<CMatrix> = {
            let ch = random_channel(2, 2, 3, &mut r);
            // recover a Kraus set from the Choi eigen-decomposition
            let eig = crate::linalg::eig_hermitian(ch.choi());
            eig.values
                .iter()
                .enumerate()
                .filter(|(_, &v)| v > 1e-12)
                .map(|(k, &v)| {
                    let col = eig.vectors.column(k);
                    CMatrix::from_fn(2, 2, |b, i| col[i * 2 + b] * v.sqrt())
                })
                .collect()
        };
        let ch = Channel::from_kraus(&kraus, 2, 2).unwrap();
        let rho = random_state(2, &mut r);
        let direct = kraus.iter().fold(CMatrix::zeros(2, 2), |acc, k| acc + k * rho.matrix() * k.adjoint());
        let out = apply_channel(&ch, &rho).unwrap();
        assert_close(out.matrix(), &direct, 1e-10);
    }
}

#[test]
fn pi_state_values() {
    assert_close(pi_state(1.0).unwrap().matrix(), QState::basis(2, 0).matrix(), 0.0);
    assert_close(pi_state(2.0).unwrap().matrix(), QState::maximally_mixed(2).matrix(), 1e-15);
    assert!(pi_state(0.5).is_err());
    assert!(pi_state(f64::NAN).is_err());
}

#[test]
fn identity_superchannel_preserves_channels() {
    let mut r = rng(4);
    let ch = random_channel(2, 2, 2, &mut r);
    let theta = Superchannel::identity(2, 2);
    assert!(validate_superchannel(&theta, 1e-9).passes);
    let out = apply_superchannel(&theta, &ch).unwrap();
    assert_close(out.choi().matrix(), ch.choi().matrix(), 1e-12);
}

#[test]
fn pre_post_matches_explicit_composition() {
    let mut r = rng(5);
    for _ in 0..10 {
        let (dc, da, dm, db, dd) = (2, 2, 2, 2, 2);
        let pre = random_channel(dc, da * dm, 2, &mut r);
        let post = random_channel(db * dm, dd, 2, &mut r);
        let n = random_channel(da, db, 2, &mut r);
        let theta = superchannel_from_pre_post(&pre, &post, da, db).unwrap();
        let report = validate_superchannel(&theta, 1e-9);
        assert!(report.passes, "{report:?}");

        // pre on (C, A, M); N on A → (C, M, B); post on (B, M) → (C, D)
        let (mid, mid_dims) = apply_on_factors(n.choi().matrix(), db, pre.choi().matrix(), &[dc, da, dm], &[1]);
        assert_eq!(mid_dims, vec![dc, dm, db]);
        let (explicit, _) = apply_on_factors(post.choi().matrix(), dd, &mid, &mid_dims, &[2, 1]);

        let out = apply_superchannel(&theta, &n).unwrap();
        assert_close(out.choi().matrix(), &explicit, 1e-9);
        assert!(out.cp_residual() <= 1e-8 && out.tp_residual() <= 1e-8);
    }
}

#[test]
fn random_superchannels_validate() {
    let mut r = rng(6);
    for memory in 1..=3 {
        let theta = random_superchannel(2, 2, 2, 2, memory, &mut r).unwrap();
        assert!(validate_superchannel(&theta, 1e-9).passes);
    }
}

#[test]
fn swap_signals() {
    // channel (C, B) → (A, D): |c, b⟩ ↦ |b⟩_A |c⟩_D
    let mut u = CMatrix::zeros(4, 4);
    for c in 0..2 {
        for b in 0..2 {
            u[(b * 2 + c, c * 2 + b)] = c64(1.0, 0.0);
        }
    }
    let swap = Channel::unitary(&u).unwrap();
    let theta = Superchannel::new(swap.choi().matrix().clone(), [2, 2, 2, 2]).unwrap();
    let report = validate_superchannel(&theta, 1e-8);
    assert!(report.tp_residual < 1e-12);
    assert!(report.ns_residual > 0.1);
    assert!(!report.passes);
}

#[test]
fn cq_channel_cases() {
    let mut r = rng(7);
    let s = random_state(2, &mut r);
    let single = Channel::classical_quantum(std::slice::from_ref(&s)).unwrap();
    assert_close(single.choi().matrix(), Channel::replacer(&s, 1).choi().matrix(), 1e-15);

    let states: Vec<QState> = (0..3).map(|_| random_state(2, &mut r)).collect();
    let ch = Channel::classical_quantum(&states).unwrap();
    for (x, s) in states.iter().enumerate() {
        let out = apply_channel(&ch, &QState::basis(3, x)).unwrap();
        assert_close(out.matrix(), s.matrix(), 1e-12);
    }
    let cq = ChannelBox::new(ch.clone(), ch).unwrap().as_cq(1e-12).unwrap();
    assert_eq!(cq.symbols(), 3);
}

#[test]
fn standard_box_is_replacer_pair() {
    let b = ChannelBox::standard(4.0, 1).unwrap();
    assert_close(b.first.choi().matrix(), QState::basis(2, 0).matrix(), 0.0);
    assert_close(b.second.choi().matrix(), &Hermitian::diagonal(&[0.25, 0.75]).into_matrix(), 1e-15);
}

#[test]
fn trivial_env_realization_round_trip() {
    let mut r = rng(8);
    let b = ChannelBox::new(random_channel(2, 2, 2, &mut r), random_channel(2, 2, 4, &mut r)).unwrap();
    let e = trivial_env_realization(&b).unwrap();
    let back = env_realize(&e).unwrap();
    assert_close(back.first.choi().matrix(), b.first.choi().matrix(), 1e-9);
    assert_close(back.second.choi().matrix(), b.second.choi().matrix(), 1e-9);
}

/// Choi over `(A, E, B)` of `ω ⊗ ζ ↦ ω`.
fn discard_env(da: usize, de: usize) -> Channel {
    let joint = kron(&gamma_operator(da), &Hermitian::identity(vec![de]));
    let choi = permute_subsystems(&joint, &[0, 2, 1]).unwrap();
    Channel::from_choi(choi.into_matrix(), da * de, da).unwrap()
}

/// Choi over `(A, E, B)` of `ω ⊗ ζ ↦ Tr[ω] ζ`.
fn swap_discard(da: usize, de: usize) -> Channel {
    let choi = kron(&Hermitian::identity(vec![da]), &gamma_operator(de));
    Channel::from_choi(choi.into_matrix(), da * de, de).unwrap()
}

/// Decoder `(R, B) → E`: trace out `R`, then apply `inner` on `B`.
fn trace_ref_then(dr: usize, inner: &Channel) -> Channel {
    let choi = kron(&Hermitian::identity(vec![dr]), inner.choi());
    Channel::from_choi(choi.into_matrix(), dr * inner.in_dim(), inner.out_dim()).unwrap()
}

#[test]
fn discarding_environment_gives_identical_channels() {
    let mut r = rng(9);
    let e = EnvBox::new(discard_env(2, 3), random_state(3, &mut r), random_state(3, &mut r), None).unwrap();
    let b = env_realize(&e).unwrap();
    assert_close(b.first.choi().matrix(), b.second.choi().matrix(), 1e-12);
    assert_close(b.first.choi().matrix(), gamma_operator(2).matrix(), 1e-12);
}

#[test]
fn swap_discard_gives_replacers() {
    let mut r = rng(10);
    let (rho, sigma) = (random_state(2, &mut r), random_state(2, &mut r));
    let e = EnvBox::new(swap_discard(2, 2), rho.clone(), sigma.clone(), None).unwrap();
    let b = env_realize(&e).unwrap();
    let expected = ChannelBox::replacer(&rho, &sigma, 2).unwrap();
    assert_close(b.first.choi().matrix(), expected.first.choi().matrix(), 1e-12);
    assert_close(b.second.choi().matrix(), expected.second.choi().matrix(), 1e-12);
}

#[test]
fn replacer_box_is_seizable() {
    let mut r = rng(11);
    let (rho, sigma) = (random_state(2, &mut r), random_state(2, &mut r));
    let tau = random_state(4, &mut r).with_dims(vec![2, 2]).unwrap();
    let seize = SeizeData { input: tau, decoder: trace_ref_then(2, &Channel::identity(2)) };
    let e = EnvBox::new(swap_discard(2, 2), rho, sigma, Some(seize)).unwrap();
    let report = env_seize_check(&e).unwrap();
    assert!(report.passes, "{report:?}");
}

#[test]
fn orthogonal_realization_seizable_when_distinguishable() {
    let b = ChannelBox::replacer(&QState::basis(2, 0), &QState::basis(2, 1), 2).unwrap();
    let mut e = trivial_env_realization(&b).unwrap();
    let measure = Channel::classical_quantum(&[QState::basis(2, 0), QState::basis(2, 1)]).unwrap();
    let tau = QState::max_entangled(2);
    e.seize = Some(SeizeData { input: tau.clone(), decoder: trace_ref_then(2, &measure) });
    assert!(env_seize_check(&e).unwrap().passes);

    let flip = Channel::unitary(&pauli_x()).unwrap();
    e.seize = Some(SeizeData { input: tau, decoder: trace_ref_then(2, &flip) });
    let report = env_seize_check(&e).unwrap();
    assert!(!report.passes);
    assert!(report.residual_first >= 0.1 && report.residual_second >= 0.1);
}

#[test]
fn missing_seize_data_is_an_error() {
    let b = ChannelBox::standard(2.0, 1).unwrap();
    let e = trivial_env_realization(&b).unwrap();
    assert!(matches!(env_seize_check(&e), Err(Error::Seize(_))));
}

#[test]
fn repaired_projects_onto_channels() {
    let mut r = rng(12);
    let ch = random_channel(2, 2, 2, &mut r);
    let noisy = ch.choi().matrix() + CMatrix::identity(4, 4) * c64(1e-4, 0.0);
    let fixed = Channel::repaired(noisy, 2, 2).unwrap();
    assert!(fixed.tp_residual() < 1e-12);
    assert!(max_abs(&(fixed.choi().matrix() - ch.choi().matrix())) < 1e-3);
}
