//! Seeded generators for states, channels, boxes and superchannels.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::linalg::{c64, spectral_fn, CMatrix, Hermitian, C64};
use crate::qobjects::{superchannel_from_pre_post, Channel, ChannelBox, QState, Superchannel};

pub type SeededRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Mixes a master seed with a stream index (SplitMix64 finalizer).
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| c64(rng.sample(StandardNormal), rng.sample(StandardNormal)))
}

pub fn random_vector<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<C64> {
    let v: Vec<C64> = (0..d).map(|_| c64(rng.sample(StandardNormal), rng.sample(StandardNormal))).collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / norm).collect()
}

pub fn random_pure<R: Rng + ?Sized>(d: usize, rng: &mut R) -> QState {
    QState::pure(&random_vector(d, rng)).expect("nonzero vector")
}

/// Full-rank mixed state `GG†/Tr[GG†]`.
pub fn random_state<R: Rng + ?Sized>(d: usize, rng: &mut R) -> QState {
    random_state_rank(d, d, rng)
}

pub fn random_state_rank<R: Rng + ?Sized>(d: usize, rank: usize, rng: &mut R) -> QState {
    let g = ginibre(d, rank.max(1), rng);
    let w = &g * g.adjoint();
    let trace = w.trace().re;
    QState::new(Hermitian::symmetrized(w.unscale(trace), vec![d])).expect("normalized Gram matrix")
}

/// Haar unitary from the QR decomposition of a Ginibre matrix.
pub fn random_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMatrix {
    let qr = ginibre(d, d, rng).qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..d {
        let diag = r[(j, j)];
        let phase = if diag.norm() > 0.0 { diag / diag.norm() } else { c64(1.0, 0.0) };
        let mut col = q.column_mut(j);
        col *= phase;
    }
    q
}

/// Channel with `kraus_rank` Gaussian Kraus operators, normalized by
/// `(Σ K†K)^{-1/2}`. The rank is raised to `⌈d_in/d_out⌉` if needed.
pub fn random_channel<R: Rng + ?Sized>(in_dim: usize, out_dim: usize, kraus_rank: usize, rng: &mut R) -> Channel {
    let raw: Vec<CMatrix> =
        (0..kraus_rank.max(in_dim.div_ceil(out_dim)).max(1)).map(|_| ginibre(out_dim, in_dim, rng)).collect();
    let gram = raw.iter().fold(CMatrix::zeros(in_dim, in_dim), |acc, k| acc + k.adjoint() * k);
    let inv_sqrt = spectral_fn(&Hermitian::symmetrized(gram, vec![in_dim]), |v| v.powf(-0.5), None).expect("Hermitian");
    let kraus: Vec<CMatrix> = raw.iter().map(|k| k * inv_sqrt.matrix()).collect();
    Channel::from_kraus(&kraus, in_dim, out_dim).expect("normalized Kraus list")
}

/// Weight of the completely depolarizing channel mixed into the second
/// channel of [`random_box`].
pub const BOX_DEPOLARIZING_WEIGHT: f64 = 0.25;

/// Box whose first channel has Kraus rank 1 or 2 and whose second is a full
/// Kraus rank channel mixed with the completely depolarizing channel, so the
/// min-divergence is nonzero and the max-divergence finite and moderate.
pub fn random_box<R: Rng + ?Sized>(in_dim: usize, out_dim: usize, rng: &mut R) -> ChannelBox {
    let rank = rng.gen_range(1..=2);
    let first = random_channel(in_dim, out_dim, rank, rng);
    let raw = random_channel(in_dim, out_dim, in_dim * out_dim, rng);
    let depolarizing = Channel::replacer(&QState::maximally_mixed(out_dim), in_dim);
    let w = BOX_DEPOLARIZING_WEIGHT;
    let mixed = raw.choi().matrix().scale(1.0 - w) + depolarizing.choi().matrix().scale(w);
    let second = Channel::from_choi(mixed, in_dim, out_dim).expect("convex mixture of channels");
    ChannelBox::new(first, second).expect("equal dimensions")
}

/// `post ∘ (· ⊗ id_M) ∘ pre` with random pre- and post-processing channels.
pub fn random_superchannel<R: Rng + ?Sized>(
    outer_in: usize,
    inner_out: usize,
    inner_in: usize,
    outer_out: usize,
    memory: usize,
    rng: &mut R,
) -> Result<Superchannel> {
    let pre = random_channel(outer_in, inner_in * memory, 2, rng);
    let post = random_channel(inner_out * memory, outer_out, 2, rng);
    superchannel_from_pre_post(&pre, &post, inner_in, inner_out)
}

/// Classical-quantum box with full-rank outputs.
pub fn random_cq_pairs<R: Rng + ?Sized>(symbols: usize, d: usize, rng: &mut R) -> Vec<(QState, QState)> {
    (0..symbols).map(|_| (random_state(d, rng), random_state(d, rng))).collect()
}
