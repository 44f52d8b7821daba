//! Divergences between quantum states.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg::{eig_values, spectral_fn, support_projector, trace_norm, Hermitian, DEFAULT_RANK_TOL};
use crate::qobjects::{Channel, ChannelBox, QState};
use crate::sdp::{self, BlockKind, ConicProgram, Expr, InfinitySource, Sense, SolverSettings, Status};

/// A real number or `+∞`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ExtendedReal {
    Finite(f64),
    Infinite,
}

impl ExtendedReal {
    /// `+∞` for any infinite input; `-∞` is rejected by callers upstream.
    pub fn from_f64(v: f64) -> Self {
        if v == f64::INFINITY {
            ExtendedReal::Infinite
        } else {
            ExtendedReal::Finite(v)
        }
    }

    pub fn value(self) -> f64 {
        match self {
            ExtendedReal::Finite(v) => v,
            ExtendedReal::Infinite => f64::INFINITY,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, ExtendedReal::Finite(_))
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            ExtendedReal::Finite(v) => Some(v),
            ExtendedReal::Infinite => None,
        }
    }
}

impl PartialOrd for ExtendedReal {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        self.value().partial_cmp(&other.value())
    }
}

impl fmt::Display for ExtendedReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtendedReal::Finite(v) => write!(f, "{v}"),
            ExtendedReal::Infinite => f.write_str("+inf"),
        }
    }
}

impl Serialize for ExtendedReal {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ExtendedReal::Finite(v) => s.serialize_f64(*v),
            ExtendedReal::Infinite => s.serialize_str("+inf"),
        }
    }
}

impl<'de> Deserialize<'de> for ExtendedReal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Number(v) => Ok(ExtendedReal::Finite(v)),
            Raw::Text(t) if t == "+inf" => Ok(ExtendedReal::Infinite),
            Raw::Text(t) => Err(serde::de::Error::custom(format!("expected number or \"+inf\", got {t:?}"))),
        }
    }
}

/// Divergence selector shared by state, channel and cq evaluations.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "alpha")]
pub enum Divergence {
    Relative,
    Petz(f64),
    Sandwiched(f64),
    /// `−log₂ F`.
    Fidelity,
    Dmin,
    Dmax,
    /// Normalized trace distance; the diamond distance for channels.
    Trace,
}

impl Divergence {
    pub fn name(self) -> String {
        match self {
            Divergence::Relative => "relative".into(),
            Divergence::Petz(a) => format!("petz({a})"),
            Divergence::Sandwiched(a) => format!("sandwiched({a})"),
            Divergence::Fidelity => "fidelity".into(),
            Divergence::Dmin => "dmin".into(),
            Divergence::Dmax => "dmax".into(),
            Divergence::Trace => "trace".into(),
        }
    }
}

fn same_dim(rho: &QState, sigma: &QState) -> Result<()> {
    if rho.dim() != sigma.dim() {
        return Err(Error::Dimension(format!("state dims {} vs {}", rho.dim(), sigma.dim())));
    }
    Ok(())
}

fn flat(s: &QState) -> Hermitian {
    Hermitian::symmetrized(s.matrix().clone(), vec![s.dim()])
}

/// `½‖ρ − σ‖₁`.
pub fn trace_distance(rho: &QState, sigma: &QState) -> Result<f64> {
    same_dim(rho, sigma)?;
    Ok((0.5 * trace_norm(&flat(rho).sub(&flat(sigma))?)).min(1.0))
}

/// `(Tr|√ρ√σ|)²`.
pub fn fidelity(rho: &QState, sigma: &QState) -> Result<f64> {
    same_dim(rho, sigma)?;
    let sqrt_rho = spectral_fn(&flat(rho), |v| v.max(0.0).sqrt(), None)?;
    let inner = flat(sigma).congruence(sqrt_rho.matrix());
    let root_sum: f64 = eig_values(&inner).iter().map(|v| v.max(0.0).sqrt()).sum();
    Ok((root_sum * root_sum).clamp(0.0, 1.0))
}

/// Weight of `ρ` outside the support of `σ`.
fn support_violation(rho: &Hermitian, sigma: &Hermitian, rank_tol: f64) -> Result<f64> {
    let pi_sigma = support_projector(sigma, rank_tol)?;
    let outside = Hermitian::identity(vec![rho.dim()]).sub(&pi_sigma)?;
    Ok(rho.congruence(outside.matrix()).max_eigenvalue())
}

/// `−log₂ Tr[Π_ρ σ]`.
pub fn dmin(rho: &QState, sigma: &QState) -> Result<ExtendedReal> {
    dmin_with_tol(rho, sigma, DEFAULT_RANK_TOL)
}

pub fn dmin_with_tol(rho: &QState, sigma: &QState, rank_tol: f64) -> Result<ExtendedReal> {
    same_dim(rho, sigma)?;
    let overlap = support_projector(&flat(rho), rank_tol)?.inner(&flat(sigma));
    if overlap <= rank_tol {
        return Ok(ExtendedReal::Infinite);
    }
    Ok(ExtendedReal::Finite(-overlap.min(1.0).log2()))
}

/// `log₂ ‖σ^{−1/2} ρ σ^{−1/2}‖_∞` on the support of `σ`.
pub fn dmax(rho: &QState, sigma: &QState) -> Result<ExtendedReal> {
    dmax_with_tol(rho, sigma, DEFAULT_RANK_TOL)
}

pub fn dmax_with_tol(rho: &QState, sigma: &QState, rank_tol: f64) -> Result<ExtendedReal> {
    same_dim(rho, sigma)?;
    let (r, s) = (flat(rho), flat(sigma));
    if support_violation(&r, &s, rank_tol)? > rank_tol {
        return Ok(ExtendedReal::Infinite);
    }
    let inv_sqrt = spectral_fn(&s, |v| if v > rank_tol { v.powf(-0.5) } else { 0.0 }, None)?;
    let top = r.congruence(inv_sqrt.matrix()).max_eigenvalue();
    Ok(ExtendedReal::Finite(top.log2()))
}

fn log2_on_support(h: &Hermitian, rank_tol: f64) -> Result<Hermitian> {
    spectral_fn(h, |v| if v > rank_tol { v.log2() } else { 0.0 }, None)
}

/// `Tr[ρ(log₂ρ − log₂σ)]`.
pub fn rel_entropy(rho: &QState, sigma: &QState) -> Result<ExtendedReal> {
    same_dim(rho, sigma)?;
    let (r, s) = (flat(rho), flat(sigma));
    if support_violation(&r, &s, DEFAULT_RANK_TOL)? > DEFAULT_RANK_TOL {
        return Ok(ExtendedReal::Infinite);
    }
    let entropy_term: f64 = eig_values(&r).iter().filter(|&&v| v > 0.0).map(|v| v * v.log2()).sum();
    let cross = r.inner(&log2_on_support(&s, DEFAULT_RANK_TOL)?);
    Ok(ExtendedReal::Finite((entropy_term - cross).max(0.0)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RenyiKind {
    Petz,
    Sandwiched,
}

fn power(h: &Hermitian, p: f64) -> Result<Hermitian> {
    spectral_fn(h, |v| if v > DEFAULT_RANK_TOL { v.powf(p) } else { 0.0 }, None)
}

/// Petz or sandwiched Rényi divergence of order `α ∈ (0,1) ∪ (1,∞)`.
pub fn renyi(kind: RenyiKind, alpha: f64, rho: &QState, sigma: &QState) -> Result<ExtendedReal> {
    same_dim(rho, sigma)?;
    if !(alpha > 0.0) || alpha == 1.0 || !alpha.is_finite() {
        return Err(Error::Parameter(format!("Rényi order must lie in (0,1)∪(1,∞), got {alpha}")));
    }
    let (r, s) = (flat(rho), flat(sigma));
    if alpha > 1.0 && support_violation(&r, &s, DEFAULT_RANK_TOL)? > DEFAULT_RANK_TOL {
        return Ok(ExtendedReal::Infinite);
    }
    let q = match kind {
        RenyiKind::Petz => power(&r, alpha)?.inner(&power(&s, 1.0 - alpha)?),
        RenyiKind::Sandwiched => {
            let side = power(&s, (1.0 - alpha) / (2.0 * alpha))?;
            let inner = r.congruence(side.matrix());
            eig_values(&inner).iter().map(|v| v.max(0.0).powf(alpha)).sum()
        }
    };
    if q <= 0.0 {
        return Ok(ExtendedReal::Infinite);
    }
    Ok(ExtendedReal::Finite(q.log2() / (alpha - 1.0)))
}

/// `Tr[ρ(log₂ρ − log₂σ − D)²]`.
pub fn rel_ent_variance(rho: &QState, sigma: &QState) -> Result<f64> {
    same_dim(rho, sigma)?;
    let (r, s) = (flat(rho), flat(sigma));
    if support_violation(&r, &s, DEFAULT_RANK_TOL)? > DEFAULT_RANK_TOL {
        return Err(Error::Parameter("support of ρ is not contained in support of σ".into()));
    }
    let d = rel_entropy(rho, sigma)?.value();
    let shift = Hermitian::identity(vec![r.dim()]).scale(d);
    let log_ratio = log2_on_support(&r, DEFAULT_RANK_TOL)?.sub(&log2_on_support(&s, DEFAULT_RANK_TOL)?)?.sub(&shift)?;
    let square = log_ratio.matrix() * log_ratio.matrix();
    Ok(crate::linalg::trace_product(r.matrix(), &square).max(0.0))
}

/// Evaluates a selector on a state pair.
pub fn state_divergence(div: Divergence, rho: &QState, sigma: &QState) -> Result<ExtendedReal> {
    match div {
        Divergence::Relative => rel_entropy(rho, sigma),
        Divergence::Petz(a) => renyi(RenyiKind::Petz, a, rho, sigma),
        Divergence::Sandwiched(a) => renyi(RenyiKind::Sandwiched, a, rho, sigma),
        Divergence::Fidelity => {
            let f = fidelity(rho, sigma)?;
            Ok(if f <= 0.0 { ExtendedReal::Infinite } else { ExtendedReal::Finite((-f.log2()).max(0.0)) })
        }
        Divergence::Dmin => dmin(rho, sigma),
        Divergence::Dmax => dmax(rho, sigma),
        Divergence::Trace => trace_distance(rho, sigma).map(ExtendedReal::Finite),
    }
}

pub(crate) fn check_eps(eps: f64) -> Result<()> {
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::Parameter(format!("ε must lie in [0,1), got {eps}")));
    }
    Ok(())
}

/// Maps an inner optimum `p` to `−log₂ p`, treating tiny `p` as `+∞`.
///
/// The solver cannot resolve `p` below its feasibility tolerance, so the
/// cutoff is the larger of that tolerance and `1/unbounded_threshold`.
pub(crate) fn neg_log2_inner(p: f64, settings: &SolverSettings) -> (ExtendedReal, Option<InfinitySource>) {
    if p <= settings.feasibility_tol.max(1.0 / settings.unbounded_threshold) {
        (ExtendedReal::Infinite, Some(InfinitySource::ThresholdInferred))
    } else {
        (ExtendedReal::Finite(-p.min(1.0).log2()), None)
    }
}

/// Hypothesis-testing divergence `−log₂ inf{Tr[Λσ] : 0 ≤ Λ ≤ I, Tr[Λρ] ≥ 1−ε}`.
pub fn dmin_eps(rho: &QState, sigma: &QState, eps: f64, settings: &SolverSettings) -> Result<ExtendedReal> {
    same_dim(rho, sigma)?;
    check_eps(eps)?;
    let d = rho.dim();
    let mut p = ConicProgram::new(Sense::Min);
    let test = p.add_block(BlockKind::PsdHermitian(d));
    p.set_objective(p.trace_with(test, sigma.matrix()));
    p.add_psd("test below identity", Expr::constant(&Hermitian::identity(vec![d])) - p.var(test));
    p.add_psd("type-I error", p.trace_with(test, rho.matrix()) - Expr::scalar(1.0 - eps));
    let sol = sdp::solve(&p, settings)?;
    match sol.status {
        Status::Optimal => Ok(neg_log2_inner(sol.objective_value, settings).0),
        status => Err(Error::Solver(format!("hypothesis-testing program ended {status:?}"))),
    }
}

/// `inf { D_max(ρ̃‖σ) : ½‖ρ̃ − ρ‖₁ ≤ ε }`, via the channel program with a
/// one-dimensional input.
pub fn dmax_eps(rho: &QState, sigma: &QState, eps: f64, settings: &SolverSettings) -> Result<ExtendedReal> {
    same_dim(rho, sigma)?;
    let b = ChannelBox::new(Channel::replacer(rho, 1), Channel::replacer(sigma, 1))?;
    Ok(crate::channel_div::channel_dmax_eps(&b, eps, settings)?.report.value)
}
