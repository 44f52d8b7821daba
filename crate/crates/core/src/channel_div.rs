//! Channel divergences: diamond distance, channel min/max-relative entropies
//! and their smoothed versions, heuristic generalized divergences, and
//! closed forms for special boxes.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    c64, eig_hermitian, gamma_vector, partial_trace_matrix, trace_norm, CMatrix, Hermitian, C64, DEFAULT_RANK_TOL,
};
use crate::qobjects::{apply_channel, env_seize_check, CQBox, Channel, ChannelBox, EnvBox, QState};
use crate::random::{derive_seed, random_vector, rng};
use crate::sdp::{self, BlockKind, ConicProgram, Expr, InfinitySource, Sense, Solution, SolverSettings, Status};
use crate::state_div::{check_eps, dmax, neg_log2_inner, state_divergence, Divergence, ExtendedReal};

/// Objective values of an independently solved primal/dual pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SdpCertificate {
    pub primal_status: Status,
    pub dual_status: Status,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub iterations: u32,
    pub infinity: Option<InfinitySource>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Certificate {
    Sdp(SdpCertificate),
    Heuristic {
        restarts: usize,
        seed: u64,
        /// Best pure input over `(R, A)` as `[re, im]` amplitudes.
        best_input: Vec<[f64; 2]>,
    },
    ClosedForm,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DivergenceReport {
    pub value: ExtendedReal,
    pub certificate: Certificate,
    /// `|primal − dual|` for SDP-backed values.
    pub gap: Option<f64>,
}

impl DivergenceReport {
    pub fn closed_form(value: ExtendedReal) -> Self {
        Self { value, certificate: Certificate::ClosedForm, gap: None }
    }

    /// The best input of a heuristic report.
    pub fn best_input(&self) -> Option<Vec<C64>> {
        match &self.certificate {
            Certificate::Heuristic { best_input, .. } => Some(best_input.iter().map(|p| c64(p[0], p[1])).collect()),
            _ => None,
        }
    }
}

pub(crate) fn certificate(primal: &Solution, dual: &Solution, infinity: Option<InfinitySource>) -> SdpCertificate {
    SdpCertificate {
        primal_status: primal.status,
        dual_status: dual.status,
        primal_objective: primal.objective_value,
        dual_objective: dual.objective_value,
        iterations: primal.iterations + dual.iterations,
        infinity,
    }
}

pub(crate) fn gap_of(primal: &Solution, dual: &Solution) -> Option<f64> {
    let g = (primal.objective_value - dual.objective_value).abs();
    g.is_finite().then_some(g)
}

pub(crate) fn ensure_optimal(sol: &Solution, what: &str) -> Result<()> {
    match sol.status {
        Status::Optimal => Ok(()),
        status => Err(Error::Solver(format!("{what} ended {status:?}"))),
    }
}

fn same_box_dims(n: &Channel, m: &Channel) -> Result<()> {
    ChannelBox::new(n.clone(), m.clone()).map(|_| ())
}

pub(crate) fn lift(x: &CMatrix, out_dim: usize) -> CMatrix {
    x.kronecker(&CMatrix::identity(out_dim, out_dim))
}

pub(crate) fn trace_out(x: &CMatrix, in_dim: usize, out_dim: usize) -> CMatrix {
    partial_trace_matrix(x, &[in_dim, out_dim], &[0]).expect("two factors")
}

pub(crate) fn scalar_times(x: &CMatrix, m: &CMatrix) -> CMatrix {
    m * x[(0, 0)]
}

/// `sup Tr[Ω(Γ_N − Γ_M)]` over `0 ≤ Ω ≤ ρ_R ⊗ I_B`, `Tr ρ_R = 1`.
pub fn diamond_primal(n: &Channel, m: &Channel) -> ConicProgram {
    let (da, db) = (n.in_dim(), n.out_dim());
    let diff = n.choi().matrix() - m.choi().matrix();
    let mut p = ConicProgram::new(Sense::Max);
    let omega = p.add_block(BlockKind::PsdHermitian(da * db));
    let rho = p.add_block(BlockKind::PsdHermitian(da));
    p.set_objective(p.trace_with(omega, &diff));
    p.add_psd("Ω ≤ ρ ⊗ I", p.map(rho, da * db, |x| lift(x, db)) - p.var(omega));
    p.add_zero("Tr ρ = 1", p.trace(rho) - Expr::scalar(1.0));
    p
}

/// `inf μ` over `Z ≥ Γ_N − Γ_M`, `Z ≥ 0`, `Tr_B Z ≤ μ I`.
pub fn diamond_dual(n: &Channel, m: &Channel) -> ConicProgram {
    let (da, db) = (n.in_dim(), n.out_dim());
    let diff = Hermitian::symmetrized(n.choi().matrix() - m.choi().matrix(), vec![da * db]);
    let id = CMatrix::identity(da, da);
    let mut p = ConicProgram::new(Sense::Min);
    let mu = p.add_block(BlockKind::NonnegScalar);
    let z = p.add_block(BlockKind::PsdHermitian(da * db));
    p.set_objective(p.var(mu));
    p.add_psd("Z ≥ Γ_N − Γ_M", p.var(z) - Expr::constant(&diff));
    p.add_psd("Tr_B Z ≤ μ I", p.map(mu, da, |x| scalar_times(x, &id)) - p.map(z, da, |x| trace_out(x, da, db)));
    p
}

/// Normalized diamond distance `½‖N − M‖_⋄`.
///
/// Both programs are solved; the reported value is the primal optimum,
/// clamped to the Choi bracket `[½‖ΔΓ‖₁/d_A, ½‖ΔΓ‖₁] ∩ [0, 1]`.
pub fn diamond_distance(n: &Channel, m: &Channel, settings: &SolverSettings) -> Result<DivergenceReport> {
    same_box_dims(n, m)?;
    let diff = Hermitian::symmetrized(n.choi().matrix() - m.choi().matrix(), vec![n.choi().dim()]);
    let upper = (0.5 * trace_norm(&diff)).min(1.0);
    let lower = 0.5 * trace_norm(&diff) / n.in_dim() as f64;
    if upper <= 1e-14 {
        return Ok(DivergenceReport::closed_form(ExtendedReal::Finite(upper.max(0.0))));
    }
    let primal = sdp::solve(&diamond_primal(n, m), settings)?;
    let dual = sdp::solve(&diamond_dual(n, m), settings)?;
    ensure_optimal(&primal, "diamond primal")?;
    ensure_optimal(&dual, "diamond dual")?;
    let value = primal.objective_value.clamp(lower, upper.max(lower));
    Ok(DivergenceReport {
        value: ExtendedReal::Finite(value),
        gap: gap_of(&primal, &dual),
        certificate: Certificate::Sdp(certificate(&primal, &dual, None)),
    })
}

/// `D_max` of the Choi states; the maximally entangled input is optimal.
pub fn channel_dmax(b: &ChannelBox) -> Result<ExtendedReal> {
    dmax(&b.first.choi_state(), &b.second.choi_state())
}

/// Primal program of the smooth channel min-relative entropy.
pub fn dmin_eps_primal(b: &ChannelBox, eps: f64) -> ConicProgram {
    let (da, db) = (b.in_dim(), b.out_dim());
    let mut p = ConicProgram::new(Sense::Min);
    let omega = p.add_block(BlockKind::PsdHermitian(da * db));
    let rho = p.add_block(BlockKind::PsdHermitian(da));
    p.set_objective(p.trace_with(omega, b.second.choi().matrix()));
    p.add_psd("Tr[ΩΓ_N] ≥ 1 − ε", p.trace_with(omega, b.first.choi().matrix()) - Expr::scalar(1.0 - eps));
    p.add_psd("Ω ≤ ρ ⊗ I", p.map(rho, da * db, |x| lift(x, db)) - p.var(omega));
    p.add_zero("Tr ρ = 1", p.trace(rho) - Expr::scalar(1.0));
    p
}

/// Dual program: `sup μ(1−ε) − λ` over `μΓ_N ≤ Γ_M + Y`, `Tr_B Y ≤ λ I`.
pub fn dmin_eps_dual(b: &ChannelBox, eps: f64) -> ConicProgram {
    let (da, db) = (b.in_dim(), b.out_dim());
    let gamma_n = b.first.choi().matrix().clone();
    let id = CMatrix::identity(da, da);
    let mut p = ConicProgram::new(Sense::Max);
    let mu = p.add_block(BlockKind::NonnegScalar);
    let lambda = p.add_block(BlockKind::NonnegScalar);
    let y = p.add_block(BlockKind::PsdHermitian(da * db));
    p.set_objective(p.var(mu) * (1.0 - eps) - p.var(lambda));
    p.add_psd(
        "μΓ_N ≤ Γ_M + Y",
        Expr::constant(b.second.choi()) + p.var(y) - p.map(mu, da * db, |x| scalar_times(x, &gamma_n)),
    );
    p.add_psd("Tr_B Y ≤ λ I", p.map(lambda, da, |x| scalar_times(x, &id)) - p.map(y, da, |x| trace_out(x, da, db)));
    p
}

#[derive(Clone, Debug, PartialEq)]
pub struct DminEps {
    pub report: DivergenceReport,
    /// Optimal input marginal `ρ_R`.
    pub input_marginal: Hermitian,
    /// Optimal test `Ω_RB`.
    pub test: Hermitian,
}

/// Isometry onto the kernel (`null`) or the support of a Choi operator, one
/// column per eigenvector.
fn choi_eigenspace(n: &Channel, null: bool) -> CMatrix {
    let eigen = eig_hermitian(n.choi());
    let cutoff = DEFAULT_RANK_TOL * eigen.values.last().copied().unwrap_or(1.0).max(1.0);
    let cols: Vec<usize> = (0..eigen.values.len()).filter(|&j| (eigen.values[j] <= cutoff) == null).collect();
    CMatrix::from_fn(eigen.vectors.nrows(), cols.len(), |i, j| eigen.vectors[(i, cols[j])])
}

fn choi_kernel(n: &Channel) -> CMatrix {
    choi_eigenspace(n, true)
}

/// `inf 1 − Tr[kV†Γ_M V]` over `k ≥ 0`, `VkV† ≤ ρ ⊗ I`, `Tr ρ = 1`, where `V`
/// spans the kernel of `Γ_N`. At `ε = 0` the test must be `ρ ⊗ I − VkV†`,
/// and unlike the general program this form has strictly feasible points.
pub fn dmin_zero_primal(b: &ChannelBox, kernel: &CMatrix) -> ConicProgram {
    let (da, db) = (b.in_dim(), b.out_dim());
    let g = kernel.adjoint() * b.second.choi().matrix() * kernel;
    let v = kernel.clone();
    let mut p = ConicProgram::new(Sense::Min);
    let k = p.add_block(BlockKind::PsdHermitian(kernel.ncols()));
    let rho = p.add_block(BlockKind::PsdHermitian(da));
    p.set_objective(Expr::scalar(1.0) - p.trace_with(k, &g));
    p.add_psd("VkV† ≤ ρ ⊗ I", p.map(rho, da * db, |x| lift(x, db)) - p.map(k, da * db, |x| &v * x * v.adjoint()));
    p.add_zero("Tr ρ = 1", p.trace(rho) - Expr::scalar(1.0));
    p
}

/// Dual: `sup 1 + t` over `V†WV ≥ V†Γ_M V`, `tI + Tr_B W ≤ 0`, `W ≥ 0`.
pub fn dmin_zero_dual(b: &ChannelBox, kernel: &CMatrix) -> ConicProgram {
    let (da, db) = (b.in_dim(), b.out_dim());
    let g = Hermitian::symmetrized(kernel.adjoint() * b.second.choi().matrix() * kernel, vec![kernel.ncols()]);
    let v = kernel.clone();
    let id = CMatrix::identity(da, da);
    let mut p = ConicProgram::new(Sense::Max);
    let t = p.add_block(BlockKind::FreeScalar);
    let w = p.add_block(BlockKind::PsdHermitian(da * db));
    p.set_objective(Expr::scalar(1.0) + p.var(t));
    p.add_psd("V†WV ≥ V†Γ_M V", p.map(w, kernel.ncols(), |x| v.adjoint() * x * &v) - Expr::constant(&g));
    p.add_psd(
        "tI + Tr_B W ≤ 0",
        Expr::zero(da) - p.map(t, da, |x| scalar_times(x, &id)) - p.map(w, da, |x| trace_out(x, da, db)),
    );
    p
}

fn channel_dmin_zero(b: &ChannelBox, settings: &SolverSettings) -> Result<DminEps> {
    let (da, db) = (b.in_dim(), b.out_dim());
    let kernel = choi_kernel(&b.first);
    let rho = Hermitian::identity(vec![da]).scale(1.0 / da as f64);
    if kernel.ncols() == 0 {
        return Ok(DminEps {
            report: DivergenceReport::closed_form(ExtendedReal::Finite(0.0)),
            test: Hermitian::symmetrized(lift(rho.matrix(), db), vec![da * db]),
            input_marginal: rho,
        });
    }
    let primal = sdp::solve(&dmin_zero_primal(b, &kernel), settings)?;
    let dual = sdp::solve(&dmin_zero_dual(b, &kernel), settings)?;
    ensure_optimal(&primal, "min-relative entropy primal")?;
    let (value, infinity) = neg_log2_inner(primal.objective_value, settings);
    if value.is_finite() {
        ensure_optimal(&dual, "min-relative entropy dual")?;
    }
    let rho = primal.primal_values[1].clone();
    let k = primal.primal_values[0].matrix();
    let test = Hermitian::symmetrized(lift(rho.matrix(), db) - &kernel * k * kernel.adjoint(), vec![da * db]);
    Ok(DminEps {
        report: DivergenceReport {
            value,
            gap: gap_of(&primal, &dual),
            certificate: Certificate::Sdp(certificate(&primal, &dual, infinity)),
        },
        test,
        input_marginal: rho,
    })
}

/// `D_min^ε(N‖M)`; at `ε = 0` this is the channel min-relative entropy.
pub fn channel_dmin_eps(b: &ChannelBox, eps: f64, settings: &SolverSettings) -> Result<DminEps> {
    check_eps(eps)?;
    if eps == 0.0 {
        return channel_dmin_zero(b, settings);
    }
    let primal = sdp::solve(&dmin_eps_primal(b, eps), settings)?;
    let dual = sdp::solve(&dmin_eps_dual(b, eps), settings)?;
    ensure_optimal(&primal, "smooth min primal")?;
    let (value, infinity) = neg_log2_inner(primal.objective_value, settings);
    if value.is_finite() {
        ensure_optimal(&dual, "smooth min dual")?;
    }
    Ok(DminEps {
        report: DivergenceReport {
            value,
            gap: gap_of(&primal, &dual),
            certificate: Certificate::Sdp(certificate(&primal, &dual, infinity)),
        },
        test: primal.primal_values[0].clone(),
        input_marginal: primal.primal_values[1].clone(),
    })
}

pub fn channel_dmin(b: &ChannelBox, settings: &SolverSettings) -> Result<ExtendedReal> {
    Ok(channel_dmin_eps(b, 0.0, settings)?.report.value)
}

/// Primal program of the smooth channel max-relative entropy; block 1 is `Y`.
pub fn dmax_eps_primal(b: &ChannelBox, eps: f64) -> ConicProgram {
    let (da, db) = (b.in_dim(), b.out_dim());
    let gamma_m = b.second.choi().matrix().clone();
    let mut p = ConicProgram::new(Sense::Min);
    let lambda = p.add_block(BlockKind::NonnegScalar);
    let y = p.add_block(BlockKind::PsdHermitian(da * db));
    let z = p.add_block(BlockKind::PsdHermitian(da * db));
    p.set_objective(p.var(lambda));
    p.add_psd("Y ≤ λΓ_M", p.map(lambda, da * db, |x| scalar_times(x, &gamma_m)) - p.var(y));
    p.add_zero("Tr_B Y = I", p.map(y, da, |x| trace_out(x, da, db)) - Expr::constant(&Hermitian::identity(vec![da])));
    p.add_psd(
        "Tr_B Z ≤ εI",
        Expr::constant(&Hermitian::identity(vec![da]).scale(eps)) - p.map(z, da, |x| trace_out(x, da, db)),
    );
    p.add_psd("Z ≥ Γ_N − Y", p.var(z) + p.var(y) - Expr::constant(b.first.choi()));
    p
}

/// Dual program: `sup Tr Z_R − ε Tr P + Tr[WΓ_N]`.
pub fn dmax_eps_dual(b: &ChannelBox, eps: f64) -> ConicProgram {
    let (da, db) = (b.in_dim(), b.out_dim());
    let mut p = ConicProgram::new(Sense::Max);
    let l = p.add_block(BlockKind::PsdHermitian(da * db));
    let pen = p.add_block(BlockKind::PsdHermitian(da));
    let w = p.add_block(BlockKind::PsdHermitian(da * db));
    let zr = p.add_block(BlockKind::FreeHermitian(da));
    p.set_objective(p.trace(zr) - p.trace(pen) * eps + p.trace_with(w, b.first.choi().matrix()));
    p.add_psd("Tr[LΓ_M] ≤ 1", Expr::scalar(1.0) - p.trace_with(l, b.second.choi().matrix()));
    p.add_psd("W ≤ P ⊗ I", p.map(pen, da * db, |x| lift(x, db)) - p.var(w));
    p.add_psd("W + Z_R ⊗ I ≤ L", p.var(l) - p.map(zr, da * db, |x| lift(x, db)) - p.var(w));
    p
}

#[derive(Clone, Debug, PartialEq)]
pub struct DmaxEps {
    pub report: DivergenceReport,
    /// Optimal smoothed channel `Ñ` (absent when the value is infinite).
    pub smoothed: Option<Channel>,
}

/// `inf λ` over `λV†Γ_M V ≥ V†Γ_N V`, with `V` spanning the support of
/// `Γ_M`. The smoothing ball shrinks to `Γ_N` at `ε = 0`, which leaves the
/// general program without interior points; this one has them.
pub fn dmax_zero_primal(b: &ChannelBox, support: &CMatrix) -> ConicProgram {
    let k = support.ncols();
    let gm = support.adjoint() * b.second.choi().matrix() * support;
    let gn = Hermitian::symmetrized(support.adjoint() * b.first.choi().matrix() * support, vec![k]);
    let mut p = ConicProgram::new(Sense::Min);
    let lambda = p.add_block(BlockKind::NonnegScalar);
    p.set_objective(p.var(lambda));
    p.add_psd("λΓ_M ≥ Γ_N", p.map(lambda, k, |x| scalar_times(x, &gm)) - Expr::constant(&gn));
    p
}

/// Dual: `sup Tr[WV†Γ_N V]` over `W ≥ 0`, `Tr[WV†Γ_M V] ≤ 1`.
pub fn dmax_zero_dual(b: &ChannelBox, support: &CMatrix) -> ConicProgram {
    let k = support.ncols();
    let gm = support.adjoint() * b.second.choi().matrix() * support;
    let gn = support.adjoint() * b.first.choi().matrix() * support;
    let mut p = ConicProgram::new(Sense::Max);
    let w = p.add_block(BlockKind::PsdHermitian(k));
    p.set_objective(p.trace_with(w, &gn));
    p.add_psd("Tr[WΓ_M] ≤ 1", Expr::scalar(1.0) - p.trace_with(w, &gm));
    p
}

fn channel_dmax_zero(b: &ChannelBox, settings: &SolverSettings) -> Result<DmaxEps> {
    if !channel_dmax(b)?.is_finite() {
        return Ok(DmaxEps { report: DivergenceReport::closed_form(ExtendedReal::Infinite), smoothed: None });
    }
    let support = choi_eigenspace(&b.second, false);
    let primal = sdp::solve(&dmax_zero_primal(b, &support), settings)?;
    let dual = sdp::solve(&dmax_zero_dual(b, &support), settings)?;
    ensure_optimal(&primal, "max-relative entropy primal")?;
    ensure_optimal(&dual, "max-relative entropy dual")?;
    let value = ExtendedReal::Finite(primal.objective_value.max(f64::MIN_POSITIVE).log2());
    Ok(DmaxEps {
        report: DivergenceReport {
            value,
            gap: gap_of(&primal, &dual),
            certificate: Certificate::Sdp(certificate(&primal, &dual, None)),
        },
        smoothed: Some(b.first.clone()),
    })
}

/// `D_max^ε(N‖M)`; at `ε = 0` this equals [`channel_dmax`].
pub fn channel_dmax_eps(b: &ChannelBox, eps: f64, settings: &SolverSettings) -> Result<DmaxEps> {
    check_eps(eps)?;
    if eps == 0.0 {
        return channel_dmax_zero(b, settings);
    }
    let primal = sdp::solve(&dmax_eps_primal(b, eps), settings)?;
    let dual = sdp::solve(&dmax_eps_dual(b, eps), settings)?;
    let (value, infinity) = match primal.status {
        Status::Infeasible => (ExtendedReal::Infinite, Some(InfinitySource::SolverDeclared)),
        Status::Unbounded => (ExtendedReal::Infinite, primal.infinity),
        Status::Optimal if primal.objective_value >= settings.unbounded_threshold => {
            (ExtendedReal::Infinite, Some(InfinitySource::ThresholdInferred))
        }
        Status::Optimal => (ExtendedReal::Finite(primal.objective_value.max(f64::MIN_POSITIVE).log2()), None),
        Status::Inaccurate => return Err(Error::Solver("smooth max primal ended Inaccurate".into())),
    };
    let smoothed = if value.is_finite() {
        ensure_optimal(&dual, "smooth max dual")?;
        Some(Channel::repaired(primal.primal_values[1].matrix().clone(), b.in_dim(), b.out_dim())?)
    } else {
        None
    };
    let gap = if value.is_finite() { gap_of(&primal, &dual) } else { None };
    Ok(DmaxEps {
        report: DivergenceReport { value, gap, certificate: Certificate::Sdp(certificate(&primal, &dual, infinity)) },
        smoothed,
    })
}

/// Knobs of the multi-restart local search over pure inputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeuristicSettings {
    /// Restart 0 is the maximally entangled input; the rest are random.
    pub restarts: usize,
    pub seed: u64,
    pub max_iterations: usize,
    pub step_tol: f64,
    /// Extra starting vectors over `(R, A)`, tried before the random ones.
    #[serde(skip)]
    pub warm_starts: Vec<Vec<C64>>,
}

impl HeuristicSettings {
    pub fn new(restarts: usize, seed: u64) -> Self {
        Self { restarts, seed, max_iterations: 500, step_tol: 1e-9, warm_starts: Vec::new() }
    }

    pub fn with_warm_start(mut self, input: Vec<C64>) -> Self {
        self.warm_starts.push(input);
        self
    }
}

/// Output pair `(N(ψ), M(ψ))` for a pure input over `(R, A)` with `R ≅ A`.
pub fn box_outputs(b: &ChannelBox, psi: &[C64]) -> Result<(QState, QState)> {
    let da = b.in_dim();
    if psi.len() != da * da {
        return Err(Error::Dimension(format!("input has length {}, expected {}", psi.len(), da * da)));
    }
    let input = QState::pure(&trim_reference(psi, da))?.with_dims(vec![da, da])?;
    Ok((apply_channel(&b.first, &input)?, apply_channel(&b.second, &input)?))
}

/// Reference weights below this are dropped from a pure input before the
/// channels act, so that near-product inputs do not fake support violations.
pub const REFERENCE_WEIGHT_CUTOFF: f64 = 1e-6;

/// Projects `ψ_RA` onto the eigenvectors of `ρ_R` with weight above
/// [`REFERENCE_WEIGHT_CUTOFF`] and renormalizes.
fn trim_reference(psi: &[C64], da: usize) -> Vec<C64> {
    let norm_sqr: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
    let amplitudes = CMatrix::from_fn(da, da, |r, a| psi[r * da + a]);
    let marginal = Hermitian::symmetrized(&amplitudes * amplitudes.adjoint(), vec![da]);
    let eigen = eig_hermitian(&marginal);
    if eigen.values.iter().all(|&v| v > REFERENCE_WEIGHT_CUTOFF * norm_sqr) {
        return psi.to_vec();
    }
    let projector = eigen.reconstruct(|v| if v > REFERENCE_WEIGHT_CUTOFF * norm_sqr { 1.0 } else { 0.0 });
    let trimmed = projector * amplitudes;
    (0..da * da).map(|k| trimmed[(k / da, k % da)]).collect()
}

/// `D(N(ψ)‖M(ψ))` at a fixed pure input.
pub fn channel_div_at_input(div: Divergence, b: &ChannelBox, psi: &[C64]) -> Result<ExtendedReal> {
    let (out_n, out_m) = box_outputs(b, psi)?;
    state_divergence(div, &out_n, &out_m)
}

/// Normalized maximally entangled vector on `(R, A)`.
pub fn phi_input(d: usize) -> Vec<C64> {
    let scale = 1.0 / (d as f64).sqrt();
    gamma_vector(d).into_iter().map(|z| z * scale).collect()
}

fn to_real(v: &[C64]) -> Vec<f64> {
    v.iter().map(|z| z.re).chain(v.iter().map(|z| z.im)).collect()
}

fn to_complex(x: &[f64]) -> Vec<C64> {
    let n = x.len() / 2;
    (0..n).map(|k| c64(x[k], x[n + k])).collect()
}

fn normalized(mut x: Vec<f64>) -> Vec<f64> {
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        x.iter_mut().for_each(|v| *v /= norm);
    }
    x
}

/// Finite-difference ascent on the unit sphere with backtracking.
fn ascend(
    start: &[C64],
    objective: &(dyn Fn(&[C64]) -> f64 + Sync),
    max_iterations: usize,
    step_tol: f64,
) -> (f64, Vec<C64>) {
    const H: f64 = 1e-6;
    let eval = |x: &[f64]| objective(&to_complex(x));
    let mut x = normalized(to_real(start));
    let mut value = eval(&x);
    if !value.is_finite() {
        return (value, to_complex(&x));
    }
    let mut step = 0.1;
    for _ in 0..max_iterations {
        let mut grad = vec![0.0; x.len()];
        for k in 0..x.len() {
            let mut plus = x.clone();
            plus[k] += H;
            let mut minus = x.clone();
            minus[k] -= H;
            let (fp, fm) = (eval(&normalized(plus.clone())), eval(&normalized(minus)));
            if fp == f64::INFINITY {
                return (fp, to_complex(&normalized(plus)));
            }
            let g = (fp - fm) / (2.0 * H);
            grad[k] = if g.is_finite() { g } else { 0.0 };
        }
        let radial: f64 = grad.iter().zip(&x).map(|(g, v)| g * v).sum();
        grad.iter_mut().zip(&x).for_each(|(g, v)| *g -= radial * v);
        let grad_sq: f64 = grad.iter().map(|g| g * g).sum();
        if grad_sq.sqrt() < 1e-12 {
            break;
        }
        let mut accepted = None;
        while step > 1e-14 {
            let trial = normalized(x.iter().zip(&grad).map(|(v, g)| v + step * g).collect());
            let trial_value = eval(&trial);
            if trial_value >= value + 1e-4 * step * grad_sq {
                accepted = Some((trial, trial_value));
                break;
            }
            step *= 0.5;
        }
        let Some((trial, trial_value)) = accepted else { break };
        let moved = trial.iter().zip(&x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        x = trial;
        value = trial_value;
        if value == f64::INFINITY || moved < step_tol {
            break;
        }
        step = (step * 2.0).min(1.0);
    }
    (value, to_complex(&x))
}

/// Maximizes `objective` over pure inputs of dimension `d²`; returns the
/// best value and input. Deterministic given `settings.seed`.
fn multi_start(
    d: usize,
    objective: &(dyn Fn(&[C64]) -> f64 + Sync),
    settings: &HeuristicSettings,
) -> Result<(f64, Vec<C64>, usize)> {
    if settings.restarts == 0 {
        return Err(Error::Parameter("restarts must be at least 1".into()));
    }
    let mut starts: Vec<Vec<C64>> = vec![phi_input(d)];
    for w in &settings.warm_starts {
        if w.len() != d * d {
            return Err(Error::Dimension(format!("warm start has length {}, expected {}", w.len(), d * d)));
        }
        starts.push(w.clone());
    }
    for k in 1..settings.restarts {
        let mut r = rng(derive_seed(settings.seed, k as u64));
        starts.push(random_vector(d * d, &mut r));
    }
    let results: Vec<(f64, Vec<C64>)> =
        starts.par_iter().map(|s| ascend(s, objective, settings.max_iterations, settings.step_tol)).collect();
    let total = results.len();
    let (best, input) = results
        .into_iter()
        .filter(|(v, _)| !v.is_nan())
        .fold(None, |acc: Option<(f64, Vec<C64>)>, (v, x)| match acc {
            Some((bv, bx)) if bv >= v => Some((bv, bx)),
            _ => Some((v, x)),
        })
        .ok_or_else(|| Error::Solver("every restart produced NaN".into()))?;
    Ok((best, input, total))
}

fn pairs_of(v: &[C64]) -> Vec<[f64; 2]> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

/// Lower bound on the channel divergence by multi-restart ascent over pure
/// inputs `ψ_RA`.
pub fn channel_div_heuristic(
    div: Divergence,
    b: &ChannelBox,
    settings: &HeuristicSettings,
) -> Result<DivergenceReport> {
    let objective = |psi: &[C64]| channel_div_at_input(div, b, psi).map(|v| v.value()).unwrap_or(f64::NAN);
    let (best, input, restarts) = multi_start(b.in_dim(), &objective, settings)?;
    Ok(DivergenceReport {
        value: ExtendedReal::from_f64(best),
        certificate: Certificate::Heuristic { restarts, seed: settings.seed, best_input: pairs_of(&input) },
        gap: None,
    })
}

/// Upper bound on the channel fidelity: smallest output fidelity found.
pub fn channel_fidelity_heuristic(n0: &Channel, n1: &Channel, settings: &HeuristicSettings) -> Result<f64> {
    let b = ChannelBox::new(n0.clone(), n1.clone())?;
    let objective = |psi: &[C64]| {
        box_outputs(&b, psi).and_then(|(x, y)| crate::state_div::fidelity(&x, &y)).map(|f| -f).unwrap_or(f64::NAN)
    };
    let (best, _, _) = multi_start(b.in_dim(), &objective, settings)?;
    Ok((-best).clamp(0.0, 1.0))
}

/// `sup_x D(ρ^x‖σ^x)`; [`Divergence::Trace`] gives the diamond distance.
pub fn cq_divergence(cq: &CQBox, div: Divergence) -> Result<ExtendedReal> {
    let mut best = ExtendedReal::Finite(f64::NEG_INFINITY);
    for (rho, sigma) in cq.pairs() {
        let v = state_divergence(div, rho, sigma)?;
        if v > best {
            best = v;
        }
    }
    Ok(best)
}

/// Divergence of the environment states, after checking the seize data.
pub fn env_seizable_divergence(e: &EnvBox, div: Divergence) -> Result<ExtendedReal> {
    let report = env_seize_check(e)?;
    if !report.passes {
        return Err(Error::Seize(format!(
            "seize residuals {:.3e}, {:.3e} exceed tolerance",
            report.residual_first, report.residual_second
        )));
    }
    state_divergence(div, &e.env_states.0, &e.env_states.1)
}

/// Distance below which the eigenvalue hull is taken to contain the origin.
pub const HULL_TOL: f64 = 1e-10;

/// `D_min(id‖U) = −log₂ dist(0, conv spec U)²`.
pub fn unitary_dmin(u: &CMatrix) -> Result<ExtendedReal> {
    let d = u.nrows();
    if u.ncols() != d || d == 0 {
        return Err(Error::Dimension("unitary must be square".into()));
    }
    let deviation = crate::linalg::max_abs(&(u.adjoint() * u - CMatrix::identity(d, d)));
    if deviation > 1e-8 {
        return Err(Error::InvalidChannel(format!("U†U deviates from I by {deviation:.3e}")));
    }
    let (_, triangular) = u.clone().schur().unpack();
    let points: Vec<(f64, f64)> = (0..d).map(|k| (triangular[(k, k)].re, triangular[(k, k)].im)).collect();
    let dist = origin_hull_distance(&points);
    if dist <= HULL_TOL {
        return Ok(ExtendedReal::Infinite);
    }
    Ok(ExtendedReal::Finite((-(dist * dist).log2()).max(0.0)))
}

fn cross(o: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

fn segment_distance(a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len_sq = dx * dx + dy * dy;
    let t = if len_sq > 0.0 { (-(a.0 * dx + a.1 * dy) / len_sq).clamp(0.0, 1.0) } else { 0.0 };
    (a.0 + t * dx).hypot(a.1 + t * dy)
}

/// Euclidean distance from the origin to the convex hull of `points`
/// (monotone-chain hull).
pub fn origin_hull_distance(points: &[(f64, f64)]) -> f64 {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.partial_cmp(b).expect("finite points"));
    pts.dedup_by(|a, b| (a.0 - b.0).hypot(a.1 - b.1) < 1e-13);
    if pts.len() == 1 {
        return pts[0].0.hypot(pts[0].1);
    }
    let mut hull: Vec<(f64, f64)> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &(f64, f64)>> =
            if pass == 0 { Box::new(pts.iter()) } else { Box::new(pts.iter().rev()) };
        for &p in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    let edges = hull.len();
    let edge_distance =
        (0..edges).map(|k| segment_distance(hull[k], hull[(k + 1) % edges])).fold(f64::INFINITY, f64::min);
    if edges >= 3 {
        let inside = (0..edges).all(|k| cross(hull[k], hull[(k + 1) % edges], (0.0, 0.0)) >= 0.0);
        if inside {
            return 0.0;
        }
    }
    edge_distance
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothingRow {
    pub eps: f64,
    pub dmin_eps: ExtendedReal,
    pub dmax_eps: ExtendedReal,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothingTable {
    pub rows: Vec<SmoothingRow>,
    pub dmin: ExtendedReal,
    pub dmax: ExtendedReal,
    pub dmin_monotone: bool,
    pub dmax_monotone: bool,
    pub final_dmin_gap: f64,
    pub final_dmax_gap: f64,
    pub passes: bool,
}

/// Slack allowed in the monotonicity comparisons.
pub const SMOOTHING_MONOTONE_TOL: f64 = 1e-6;
/// Required closeness to the unsmoothed values at the last grid point.
pub const SMOOTHING_FINAL_TOL: f64 = 1e-2;

/// Tabulates smoothed values over a descending `ε` grid and checks the
/// approach to the unsmoothed values.
pub fn smoothing_limit_check(b: &ChannelBox, eps_grid: &[f64], settings: &SolverSettings) -> Result<SmoothingTable> {
    if eps_grid.is_empty() || eps_grid.iter().any(|e| !(*e > 0.0 && *e < 1.0)) {
        return Err(Error::Parameter("ε grid must be nonempty with entries in (0,1)".into()));
    }
    if eps_grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Parameter("ε grid must be strictly descending".into()));
    }
    let rows = eps_grid
        .iter()
        .map(|&eps| {
            Ok(SmoothingRow {
                eps,
                dmin_eps: channel_dmin_eps(b, eps, settings)?.report.value,
                dmax_eps: channel_dmax_eps(b, eps, settings)?.report.value,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let dmin = channel_dmin(b, settings)?;
    let dmax = channel_dmax(b)?;
    let dmin_monotone =
        rows.windows(2).all(|w| w[1].dmin_eps.value() <= w[0].dmin_eps.value() + SMOOTHING_MONOTONE_TOL);
    let dmax_monotone =
        rows.windows(2).all(|w| w[1].dmax_eps.value() >= w[0].dmax_eps.value() - SMOOTHING_MONOTONE_TOL);
    let last = rows.last().expect("nonempty grid");
    let gap = |a: ExtendedReal, b: ExtendedReal| match (a, b) {
        (ExtendedReal::Infinite, ExtendedReal::Infinite) => 0.0,
        _ => (a.value() - b.value()).abs(),
    };
    let final_dmin_gap = gap(last.dmin_eps, dmin);
    let final_dmax_gap = gap(last.dmax_eps, dmax);
    let passes = dmin_monotone
        && dmax_monotone
        && final_dmin_gap <= SMOOTHING_FINAL_TOL
        && final_dmax_gap <= SMOOTHING_FINAL_TOL;
    Ok(SmoothingTable { rows, dmin, dmax, dmin_monotone, dmax_monotone, final_dmin_gap, final_dmax_gap, passes })
}

#[cfg(test)]
mod tests;
