//! States, channels, channel boxes and superchannels in Choi form.
//!
//! Channels use the unnormalized Choi convention `Γ_RB = Σ_ij |i⟩⟨j| ⊗ N(|i⟩⟨j|)`,
//! so that `Tr_B Γ = I_R`.

mod env;
mod superchannel;

pub use env::{env_realize, env_seize_check, trivial_env_realization, EnvBox, SeizeData, SeizeReport};
pub use superchannel::{
    apply_superchannel, contract_superchannel, superchannel_from_pre_post, validate_superchannel, Superchannel,
    SuperchannelReport,
};

use crate::error::{Error, Result};
use crate::linalg::{
    eig_values, gamma_operator, kron, partial_trace, permute_matrix, permute_subsystems, CMatrix, Hermitian, ZERO,
};

pub const STATE_PSD_TOL: f64 = 1e-9;
pub const STATE_TRACE_TOL: f64 = 1e-9;
pub const CHANNEL_CP_TOL: f64 = 1e-9;
pub const CHANNEL_TP_TOL: f64 = 1e-8;

/// Density operator.
#[derive(Clone, Debug, PartialEq)]
pub struct QState {
    density: Hermitian,
}

impl QState {
    pub fn new(density: Hermitian) -> Result<Self> {
        let trace = density.trace();
        if (trace - 1.0).abs() > STATE_TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {trace} differs from 1")));
        }
        let min = density.min_eigenvalue();
        if min < -STATE_PSD_TOL {
            return Err(Error::InvalidState(format!("eigenvalue {min:.3e} is negative")));
        }
        Ok(Self { density })
    }

    pub fn from_matrix(matrix: CMatrix) -> Result<Self> {
        Self::new(Hermitian::single(matrix)?)
    }

    pub fn diagonal(probabilities: &[f64]) -> Result<Self> {
        Self::new(Hermitian::diagonal(probabilities))
    }

    /// Normalized `|ψ⟩⟨ψ|`.
    pub fn pure(vector: &[C]) -> Result<Self> {
        let norm: f64 = vector.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::InvalidState("zero vector".into()));
        }
        let v: Vec<C> = vector.iter().map(|z| z / norm).collect();
        Ok(Self { density: Hermitian::projector(&v) })
    }

    pub fn basis(d: usize, index: usize) -> Self {
        Self { density: Hermitian::basis_projector(d, index) }
    }

    pub fn maximally_mixed(d: usize) -> Self {
        Self { density: Hermitian::identity(vec![d]).scale(1.0 / d as f64) }
    }

    /// Normalized maximally entangled state on `(R, A)`.
    pub fn max_entangled(d: usize) -> Self {
        Self { density: gamma_operator(d).scale(1.0 / d as f64) }
    }

    pub fn dim(&self) -> usize {
        self.density.dim()
    }

    pub fn density(&self) -> &Hermitian {
        &self.density
    }

    pub fn matrix(&self) -> &CMatrix {
        self.density.matrix()
    }

    /// Same operator with a different factor structure.
    pub fn with_dims(self, dims: Vec<usize>) -> Result<Self> {
        Ok(Self { density: self.density.with_dims(dims)? })
    }
}

type C = crate::linalg::C64;

/// `π_M = (1/M)|0⟩⟨0| + (1 − 1/M)|1⟩⟨1|`.
pub fn pi_state(m: f64) -> Result<QState> {
    if !(m >= 1.0) || !m.is_finite() {
        return Err(Error::Parameter(format!("π_M needs finite M ≥ 1, got {m}")));
    }
    QState::diagonal(&[1.0 / m, 1.0 - 1.0 / m])
}

/// Quantum channel stored by its unnormalized Choi operator over `(R, B)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Channel {
    in_dim: usize,
    out_dim: usize,
    choi: Hermitian,
}

impl Channel {
    /// Validates complete positivity and trace preservation.
    pub fn from_choi(matrix: CMatrix, in_dim: usize, out_dim: usize) -> Result<Self> {
        let channel = Self::from_choi_unchecked(matrix, in_dim, out_dim)?;
        let cp = channel.cp_residual();
        if cp > CHANNEL_CP_TOL {
            return Err(Error::InvalidChannel(format!("Choi eigenvalue -{cp:.3e} is negative")));
        }
        let tp = channel.tp_residual();
        if tp > CHANNEL_TP_TOL {
            return Err(Error::InvalidChannel(format!("trace-preservation residual {tp:.3e}")));
        }
        Ok(channel)
    }

    /// Checks shape and hermiticity only.
    pub fn from_choi_unchecked(matrix: CMatrix, in_dim: usize, out_dim: usize) -> Result<Self> {
        if in_dim == 0 || out_dim == 0 {
            return Err(Error::Dimension("channel dimensions must be positive".into()));
        }
        let choi = Hermitian::with_tol(matrix, vec![in_dim, out_dim], 1e-8)?;
        Ok(Self { in_dim, out_dim, choi })
    }

    /// Projects onto the valid set: clips negative eigenvalues, then rescales
    /// so that `Tr_B Γ = I` exactly.
    pub fn repaired(matrix: CMatrix, in_dim: usize, out_dim: usize) -> Result<Self> {
        let raw = Self::from_choi_unchecked(matrix, in_dim, out_dim)?;
        let clipped = crate::linalg::spectral_fn(&raw.choi, |v| v.max(0.0), None)?;
        let marginal = partial_trace(&clipped, &[0])?;
        let inv_sqrt = crate::linalg::spectral_fn(&marginal, |v| if v > 1e-14 { v.powf(-0.5) } else { 0.0 }, None)?;
        let lift = inv_sqrt.matrix().kronecker(&CMatrix::identity(out_dim, out_dim));
        let fixed = &lift * clipped.matrix() * &lift;
        Self::from_choi(fixed, in_dim, out_dim)
    }

    pub fn from_kraus(kraus: &[CMatrix], in_dim: usize, out_dim: usize) -> Result<Self> {
        if kraus.is_empty() {
            return Err(Error::InvalidChannel("empty Kraus list".into()));
        }
        let mut completeness = CMatrix::zeros(in_dim, in_dim);
        let mut choi = CMatrix::zeros(in_dim * out_dim, in_dim * out_dim);
        for (n, k) in kraus.iter().enumerate() {
            if k.nrows() != out_dim || k.ncols() != in_dim {
                return Err(Error::Dimension(format!(
                    "Kraus operator {n} is {}x{}, expected {out_dim}x{in_dim}",
                    k.nrows(),
                    k.ncols()
                )));
            }
            completeness += k.adjoint() * k;
            // (I ⊗ K)|Γ⟩ has entries K[b, i] at index (i, b)
            let mut v = CMatrix::zeros(in_dim * out_dim, 1);
            for i in 0..in_dim {
                for b in 0..out_dim {
                    v[(i * out_dim + b, 0)] = k[(b, i)];
                }
            }
            choi += &v * v.adjoint();
        }
        let deviation = crate::linalg::max_abs(&(completeness - CMatrix::identity(in_dim, in_dim)));
        if deviation > CHANNEL_TP_TOL {
            return Err(Error::InvalidChannel(format!("Σ K†K deviates from I by {deviation:.3e}")));
        }
        Self::from_choi(choi, in_dim, out_dim)
    }

    pub fn identity(d: usize) -> Self {
        Self { in_dim: d, out_dim: d, choi: gamma_operator(d) }
    }

    pub fn unitary(u: &CMatrix) -> Result<Self> {
        let d = u.nrows();
        if u.ncols() != d {
            return Err(Error::Dimension("unitary must be square".into()));
        }
        let deviation = crate::linalg::max_abs(&(u.adjoint() * u - CMatrix::identity(d, d)));
        if deviation > 1e-8 {
            return Err(Error::InvalidChannel(format!("U†U deviates from I by {deviation:.3e}")));
        }
        Self::from_kraus(std::slice::from_ref(u), d, d)
    }

    /// `R_σ(ρ) = Tr[ρ] σ` with Choi `I ⊗ σ`.
    pub fn replacer(sigma: &QState, in_dim: usize) -> Self {
        let choi = kron(&Hermitian::identity(vec![in_dim]), &sigma.density)
            .with_dims(vec![in_dim, sigma.dim()])
            .expect("dims");
        Self { in_dim, out_dim: sigma.dim(), choi }
    }

    /// `ω ↦ Σ_x ⟨x|ω|x⟩ ρ^x` with Choi `Σ_x |x⟩⟨x| ⊗ ρ^x`.
    pub fn classical_quantum(states: &[QState]) -> Result<Self> {
        let first = states.first().ok_or_else(|| Error::InvalidChannel("no output states".into()))?;
        let d_out = first.dim();
        if states.iter().any(|s| s.dim() != d_out) {
            return Err(Error::Dimension("cq output states differ in dimension".into()));
        }
        let d_in = states.len();
        let mut choi = Hermitian::zeros(vec![d_in, d_out]);
        for (x, s) in states.iter().enumerate() {
            let block = kron(&Hermitian::basis_projector(d_in, x), &s.density);
            choi = choi.add(&block.with_dims(vec![d_in, d_out])?)?;
        }
        Ok(Self { in_dim: d_in, out_dim: d_out, choi })
    }

    /// Measure-and-prepare channel for a two-outcome test `{Λ, I − Λ}`,
    /// reporting the outcome as `|0⟩` or `|1⟩`.
    pub fn binary_measurement(effect: &Hermitian) -> Result<Self> {
        let d = effect.dim();
        let complement = Hermitian::identity(vec![d]).sub(&effect.clone().with_dims(vec![d])?)?;
        let t = |h: &Hermitian| h.matrix().transpose();
        let zero = Hermitian::basis_projector(2, 0);
        let one = Hermitian::basis_projector(2, 1);
        let choi = t(effect).kronecker(zero.matrix()) + t(&complement).kronecker(one.matrix());
        Self::from_choi(choi, d, 2)
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn choi(&self) -> &Hermitian {
        &self.choi
    }

    /// Choi state `Γ / d_A`, i.e. the output on the maximally entangled input.
    pub fn choi_state(&self) -> QState {
        QState { density: self.choi.scale(1.0 / self.in_dim as f64) }
    }

    /// Magnitude of the most negative Choi eigenvalue (0 if PSD).
    pub fn cp_residual(&self) -> f64 {
        (-eig_values(&self.choi)[0]).max(0.0)
    }

    pub fn tp_residual(&self) -> f64 {
        let marginal = partial_trace(&self.choi, &[0]).expect("two factors");
        crate::linalg::max_abs(&(marginal.matrix() - CMatrix::identity(self.in_dim, self.in_dim)))
    }

    /// `N ⊗ M` with Choi factors reordered to `(R₁R₂, B₁B₂)`.
    pub fn tensor(&self, other: &Channel) -> Channel {
        let product = kron(&self.choi, &other.choi);
        let choi = permute_subsystems(&product, &[0, 2, 1, 3]).expect("four factors");
        let in_dim = self.in_dim * other.in_dim;
        let out_dim = self.out_dim * other.out_dim;
        Channel { in_dim, out_dim, choi: choi.with_dims(vec![in_dim, out_dim]).expect("dims") }
    }

    /// `then ∘ self`.
    pub fn compose(&self, then: &Channel) -> Result<Channel> {
        if then.in_dim != self.out_dim {
            return Err(Error::Dimension(format!("cannot feed {} into {}", self.out_dim, then.in_dim)));
        }
        let (out, _) =
            apply_on_factors(then.choi.matrix(), then.out_dim, self.choi.matrix(), &[self.in_dim, self.out_dim], &[1]);
        Channel::from_choi_unchecked(out, self.in_dim, then.out_dim)
    }

    /// Applies the channel to the last factor of an arbitrary operator.
    pub fn apply_operator(&self, x: &Hermitian) -> Result<Hermitian> {
        let dims = x.dims();
        let last = dims.len() - 1;
        if dims[last] != self.in_dim {
            return Err(Error::Dimension(format!(
                "last factor has dimension {}, channel expects {}",
                dims[last], self.in_dim
            )));
        }
        let (out, out_dims) = apply_on_factors(self.choi.matrix(), self.out_dim, x.matrix(), dims, &[last]);
        Ok(Hermitian::symmetrized(out, out_dims))
    }
}

/// `(id ⊗ N)(ρ)` on a state over `(R_ref, A)`; the channel acts on the last factor.
pub fn apply_channel(n: &Channel, rho: &QState) -> Result<QState> {
    Ok(QState { density: n.apply_operator(&rho.density)? })
}

/// Applies a channel (given by Choi over `(in, out)`) to the factors `targets`
/// of `x`, in the listed order. Returns the output with dimensions
/// `(untouched factors in order…, out)`.
pub fn apply_on_factors(
    choi: &CMatrix,
    out_dim: usize,
    x: &CMatrix,
    dims: &[usize],
    targets: &[usize],
) -> (CMatrix, Vec<usize>) {
    let rest: Vec<usize> = (0..dims.len()).filter(|i| !targets.contains(i)).collect();
    let mut perm = rest.clone();
    perm.extend_from_slice(targets);
    let moved = permute_matrix(x, dims, &perm).expect("valid factor list");
    let r: usize = rest.iter().map(|&i| dims[i]).product();
    let t: usize = targets.iter().map(|&i| dims[i]).product();
    let o = out_dim;
    assert_eq!(choi.nrows(), t * o, "Choi does not match target factors");
    let mut out = CMatrix::from_element(r * o, r * o, ZERO);
    for a in 0..r {
        for b in 0..r {
            for i in 0..t {
                for j in 0..t {
                    let xv = moved[(a * t + i, b * t + j)];
                    if xv == ZERO {
                        continue;
                    }
                    for k in 0..o {
                        for l in 0..o {
                            out[(a * o + k, b * o + l)] += xv * choi[(i * o + k, j * o + l)];
                        }
                    }
                }
            }
        }
    }
    let mut out_dims: Vec<usize> = rest.iter().map(|&i| dims[i]).collect();
    out_dims.push(o);
    (out, out_dims)
}

/// Ordered pair of channels with matching dimensions.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelBox {
    pub first: Channel,
    pub second: Channel,
}

impl ChannelBox {
    pub fn new(first: Channel, second: Channel) -> Result<Self> {
        if first.in_dim != second.in_dim || first.out_dim != second.out_dim {
            return Err(Error::Dimension(format!(
                "box channels differ: {}→{} vs {}→{}",
                first.in_dim, first.out_dim, second.in_dim, second.out_dim
            )));
        }
        Ok(Self { first, second })
    }

    pub fn in_dim(&self) -> usize {
        self.first.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.first.out_dim
    }

    /// `(R_ρ, R_σ)`.
    pub fn replacer(rho: &QState, sigma: &QState, in_dim: usize) -> Result<Self> {
        Self::new(Channel::replacer(rho, in_dim), Channel::replacer(sigma, in_dim))
    }

    /// `(R_{|0⟩⟨0|}, R_{π_M})` carrying `log₂ M` bits.
    pub fn standard(m: f64, in_dim: usize) -> Result<Self> {
        Self::replacer(&QState::basis(2, 0), &pi_state(m)?, in_dim)
    }

    /// Recognizes classical-quantum pairs: both Choi operators block
    /// diagonal in the computational basis of `R`.
    pub fn as_cq(&self, tol: f64) -> Option<CQBox> {
        let (da, db) = (self.in_dim(), self.out_dim());
        let mut pairs = Vec::with_capacity(da);
        for x in 0..da {
            let mut states = Vec::with_capacity(2);
            for ch in [&self.first, &self.second] {
                let m = ch.choi.matrix();
                for y in 0..da {
                    if y == x {
                        continue;
                    }
                    for i in 0..db {
                        for j in 0..db {
                            if m[(x * db + i, y * db + j)].norm() > tol {
                                return None;
                            }
                        }
                    }
                }
                let block = m.view((x * db, x * db), (db, db)).into_owned();
                states.push(QState::from_matrix(block).ok()?);
            }
            let sigma = states.pop()?;
            let rho = states.pop()?;
            pairs.push((rho, sigma));
        }
        CQBox::new(pairs).ok()
    }
}

/// Output pairs `(ρ^x, σ^x)` of a classical-quantum box.
#[derive(Clone, Debug, PartialEq)]
pub struct CQBox {
    pairs: Vec<(QState, QState)>,
}

impl CQBox {
    pub fn new(pairs: Vec<(QState, QState)>) -> Result<Self> {
        let d = pairs.first().ok_or_else(|| Error::InvalidChannel("cq box needs a symbol".into()))?.0.dim();
        if pairs.iter().any(|(r, s)| r.dim() != d || s.dim() != d) {
            return Err(Error::Dimension("cq output states differ in dimension".into()));
        }
        Ok(Self { pairs })
    }

    pub fn symbols(&self) -> usize {
        self.pairs.len()
    }

    pub fn out_dim(&self) -> usize {
        self.pairs[0].0.dim()
    }

    pub fn pairs(&self) -> &[(QState, QState)] {
        &self.pairs
    }

    pub fn to_box(&self) -> ChannelBox {
        let firsts: Vec<QState> = self.pairs.iter().map(|p| p.0.clone()).collect();
        let seconds: Vec<QState> = self.pairs.iter().map(|p| p.1.clone()).collect();
        ChannelBox {
            first: Channel::classical_quantum(&firsts).expect("validated"),
            second: Channel::classical_quantum(&seconds).expect("validated"),
        }
    }
}

#[cfg(test)]
mod tests;
