//! Complex-Hermitian semidefinite programs.
//!
//! Programs are written over Hermitian matrix blocks and affine Hermitian
//! expressions. [`embed_real`] turns them into a real conic program
//! `min cᵀx s.t. Ax + s = b, s ∈ K` which the backend solves.
//!
//! Every Hermitian block of dimension `d` is parameterized by `d²` reals in an
//! orthonormal basis of the Hermitian matrices, so that `Tr[A·X]` is the
//! Euclidean inner product of parameter vectors.

pub(crate) mod backend;
mod dump;
mod embed;
mod expr;

pub use backend::solve;
pub use dump::parse_dump;
pub use embed::{embed_operator, embed_real, Embedding, RealCone, RealProgram};
pub use expr::Expr;

use serde::{Deserialize, Serialize};

use crate::linalg::{c64, eig_values, CMatrix, Hermitian, ZERO};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    Min,
    Max,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BlockKind {
    FreeScalar,
    NonnegScalar,
    FreeHermitian(usize),
    PsdHermitian(usize),
}

impl BlockKind {
    pub fn dim(self) -> usize {
        match self {
            BlockKind::FreeScalar | BlockKind::NonnegScalar => 1,
            BlockKind::FreeHermitian(d) | BlockKind::PsdHermitian(d) => d,
        }
    }

    pub fn param_count(self) -> usize {
        self.dim() * self.dim()
    }

    fn is_constrained(self) -> bool {
        matches!(self, BlockKind::NonnegScalar | BlockKind::PsdHermitian(_))
    }
}

/// Handle to a declared block.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Var(pub(crate) usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConstraintKind {
    /// Expression must vanish.
    Zero,
    /// Expression must be positive semidefinite (nonnegative for dimension 1).
    Psd,
}

#[derive(Clone, Debug)]
pub struct Constraint {
    pub label: String,
    pub kind: ConstraintKind,
    pub expr: Expr,
}

/// A complex-Hermitian conic program.
#[derive(Clone, Debug)]
pub struct ConicProgram {
    pub sense: Sense,
    blocks: Vec<BlockKind>,
    objective: Expr,
    constraints: Vec<Constraint>,
}

impl ConicProgram {
    pub fn new(sense: Sense) -> Self {
        Self { sense, blocks: Vec::new(), objective: Expr::zero(1), constraints: Vec::new() }
    }

    pub fn add_block(&mut self, kind: BlockKind) -> Var {
        self.blocks.push(kind);
        Var(self.blocks.len() - 1)
    }

    pub fn blocks(&self) -> &[BlockKind] {
        &self.blocks
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn objective(&self) -> &Expr {
        &self.objective
    }

    pub fn block_dim(&self, var: Var) -> usize {
        self.blocks[var.0].dim()
    }

    /// Objective given as a 1×1 expression.
    pub fn set_objective(&mut self, expr: Expr) {
        assert_eq!(expr.dim(), 1, "objective must be scalar");
        self.check_expr(&expr);
        self.objective = expr;
    }

    pub fn add_zero(&mut self, label: impl Into<String>, expr: Expr) {
        self.check_expr(&expr);
        self.constraints.push(Constraint { label: label.into(), kind: ConstraintKind::Zero, expr });
    }

    pub fn add_psd(&mut self, label: impl Into<String>, expr: Expr) {
        self.check_expr(&expr);
        self.constraints.push(Constraint { label: label.into(), kind: ConstraintKind::Psd, expr });
    }

    /// The block itself as an expression.
    pub fn var(&self, var: Var) -> Expr {
        Expr::identity(var, self.block_dim(var))
    }

    /// Image of the block under a real-linear, Hermiticity-preserving map.
    ///
    /// `map` is sampled on each basis element of the block, so it must be
    /// linear; the Hermitian part of its output is kept.
    pub fn map(&self, var: Var, out_dim: usize, map: impl Fn(&CMatrix) -> CMatrix) -> Expr {
        Expr::from_map(var, self.block_dim(var), out_dim, map)
    }

    /// `Tr[coefficient · X]` as a scalar expression.
    pub fn trace_with(&self, var: Var, coefficient: &CMatrix) -> Expr {
        self.map(var, 1, |x| {
            let mut out = CMatrix::zeros(1, 1);
            out[(0, 0)] = (coefficient * x).trace();
            out
        })
    }

    /// `Tr[X]` as a scalar expression.
    pub fn trace(&self, var: Var) -> Expr {
        let d = self.block_dim(var);
        self.trace_with(var, &CMatrix::identity(d, d))
    }

    fn check_expr(&self, expr: &Expr) {
        for term in expr.terms() {
            assert!(term.var < self.blocks.len(), "expression references undeclared block");
            let pc = self.blocks[term.var].param_count();
            assert!(term.entries.iter().all(|&(_, c, _)| c < pc), "column outside block");
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
    Inaccurate,
}

/// Where an infinite objective came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InfinitySource {
    SolverDeclared,
    ThresholdInferred,
}

#[derive(Clone, Debug)]
pub struct Solution {
    pub status: Status,
    /// One value per block; scalars are 1×1.
    pub primal_values: Vec<Hermitian>,
    /// One Lagrange multiplier per constraint, in the pairing `Re Tr[W·E]`.
    pub dual_values: Vec<Hermitian>,
    /// Objective in the program's own sense; `±∞` when unbounded or infeasible.
    pub objective_value: f64,
    pub dual_objective: f64,
    pub duality_gap: f64,
    pub infinity: Option<InfinitySource>,
    pub iterations: u32,
}

impl Solution {
    pub fn block(&self, var: Var) -> &Hermitian {
        &self.primal_values[var.0]
    }

    pub fn scalar(&self, var: Var) -> f64 {
        self.primal_values[var.0].matrix()[(0, 0)].re
    }
}

/// Tolerances handed to the backend.
///
/// The backend targets `gap_tol/100` and `feasibility_tol/10`. A run that
/// stalls short of those targets still counts as optimal when its relative
/// gap is within `gap_tol` and its scaled residuals within
/// `100·feasibility_tol`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverSettings {
    pub feasibility_tol: f64,
    pub gap_tol: f64,
    pub max_iterations: u32,
    pub unbounded_threshold: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self { feasibility_tol: 1e-8, gap_tol: 1e-7, max_iterations: 200, unbounded_threshold: 1e12 }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> crate::Result<()> {
        let positive = self.feasibility_tol > 0.0 && self.gap_tol > 0.0 && self.unbounded_threshold > 0.0;
        if !positive || self.max_iterations == 0 {
            return Err(crate::Error::Parameter("solver tolerances must be positive".into()));
        }
        Ok(())
    }

    /// Ten times tighter in every tolerance.
    pub fn tightened(&self) -> Self {
        Self {
            feasibility_tol: self.feasibility_tol * 0.1,
            gap_tol: self.gap_tol * 0.1,
            max_iterations: self.max_iterations.max(400),
            ..*self
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub applicable: bool,
    pub max_equality_residual: f64,
    pub min_psd_eigenvalue: f64,
    pub gap: f64,
    pub passes: bool,
}

/// Recomputes residuals of `solution` against `program`.
pub fn verify_certificate(program: &ConicProgram, solution: &Solution, tol: f64) -> CertificateReport {
    if solution.status != Status::Optimal || solution.primal_values.len() != program.blocks.len() {
        return CertificateReport {
            applicable: false,
            max_equality_residual: f64::NAN,
            min_psd_eigenvalue: f64::NAN,
            gap: f64::NAN,
            passes: false,
        };
    }
    let params: Vec<Vec<f64>> = solution.primal_values.iter().map(|h| to_params(h.matrix())).collect();
    let mut max_equality_residual = 0.0f64;
    let mut min_psd_eigenvalue = f64::INFINITY;
    for c in &program.constraints {
        let value = c.expr.evaluate(&params);
        match c.kind {
            ConstraintKind::Zero => {
                let worst = value.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                max_equality_residual = max_equality_residual.max(worst);
            }
            ConstraintKind::Psd => {
                let h = Hermitian::symmetrized(from_params(c.expr.dim(), &value), vec![c.expr.dim()]);
                min_psd_eigenvalue = min_psd_eigenvalue.min(eig_values(&h)[0]);
            }
        }
    }
    for (kind, value) in program.blocks.iter().zip(&solution.primal_values) {
        if kind.is_constrained() {
            min_psd_eigenvalue = min_psd_eigenvalue.min(eig_values(value)[0]);
        }
    }
    if !min_psd_eigenvalue.is_finite() {
        min_psd_eigenvalue = 0.0;
    }
    let gap = solution.duality_gap;
    let scale = 1.0 + solution.objective_value.abs();
    let passes = max_equality_residual <= tol && min_psd_eigenvalue >= -tol && gap <= tol * scale;
    CertificateReport { applicable: true, max_equality_residual, min_psd_eigenvalue, gap, passes }
}

const SQRT2: f64 = std::f64::consts::SQRT_2;

/// Orthonormal Hermitian basis element `p` of dimension `d`.
///
/// Index `i*d + j` is `E_ii` when `i == j`, `(E_ij + E_ji)/√2` when `i < j`,
/// and `i(E_ij − E_ji)/√2` when `i > j`.
pub fn basis_element(d: usize, p: usize) -> CMatrix {
    let (i, j) = (p / d, p % d);
    let mut m = CMatrix::zeros(d, d);
    if i == j {
        m[(i, i)] = c64(1.0, 0.0);
    } else if i < j {
        m[(i, j)] = c64(1.0 / SQRT2, 0.0);
        m[(j, i)] = c64(1.0 / SQRT2, 0.0);
    } else {
        m[(i, j)] = c64(0.0, 1.0 / SQRT2);
        m[(j, i)] = c64(0.0, -1.0 / SQRT2);
    }
    m
}

/// Coordinates of the Hermitian part of `m` in the basis of [`basis_element`].
pub fn to_params(m: &CMatrix) -> Vec<f64> {
    let d = m.nrows();
    let mut x = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..d {
            x[i * d + j] = if i == j {
                m[(i, i)].re
            } else if i < j {
                (m[(i, j)].re + m[(j, i)].re) / SQRT2
            } else {
                (m[(i, j)].im - m[(j, i)].im) / SQRT2
            };
        }
    }
    x
}

pub fn from_params(d: usize, x: &[f64]) -> CMatrix {
    let mut m = CMatrix::from_element(d, d, ZERO);
    for i in 0..d {
        m[(i, i)] = c64(x[i * d + i], 0.0);
        for j in (i + 1)..d {
            let re = x[i * d + j] / SQRT2;
            let im = x[j * d + i] / SQRT2;
            m[(i, j)] = c64(re, -im);
            m[(j, i)] = c64(re, im);
        }
    }
    m
}
