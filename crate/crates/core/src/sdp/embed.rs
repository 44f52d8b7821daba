use nalgebra::DMatrix;

use super::{basis_element, BlockKind, ConicProgram, ConstraintKind, Expr, Sense, SQRT2};
use crate::linalg::{CMatrix, Hermitian};

/// Cone of a contiguous row range of the real program.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RealCone {
    Zero(usize),
    Nonneg(usize),
    /// Real symmetric PSD cone of the given side, stored as the scaled
    /// upper triangle in column-major order.
    PsdTriangle(usize),
}

impl RealCone {
    pub fn rows(self) -> usize {
        match self {
            RealCone::Zero(m) | RealCone::Nonneg(m) => m,
            RealCone::PsdTriangle(n) => n * (n + 1) / 2,
        }
    }
}

/// `min cᵀx + offset  s.t.  Ax + s = b,  s ∈ K` (signs already flipped for
/// maximization; `negated` records that).
#[derive(Clone, Debug, PartialEq)]
pub struct RealProgram {
    pub num_vars: usize,
    pub objective: Vec<f64>,
    pub offset: f64,
    pub negated: bool,
    pub cones: Vec<RealCone>,
    /// Constraint matrix as `(row, col, value)`; duplicates add up.
    pub a: Vec<(usize, usize, f64)>,
    pub b: Vec<f64>,
}

impl RealProgram {
    pub fn num_rows(&self) -> usize {
        self.cones.iter().map(|c| c.rows()).sum()
    }

    /// Structural consistency of dimensions and indices.
    pub fn is_well_formed(&self) -> bool {
        let m = self.num_rows();
        self.objective.len() == self.num_vars
            && self.b.len() == m
            && self.a.iter().all(|&(i, j, v)| i < m && j < self.num_vars && v.is_finite())
            && self.objective.iter().chain(&self.b).all(|v| v.is_finite())
            && self.offset.is_finite()
            && self.cones.iter().all(|c| c.rows() > 0)
    }
}

/// Bookkeeping that maps real rows and columns back to the complex program.
#[derive(Clone, Debug)]
pub struct Embedding {
    pub program: RealProgram,
    pub block_offsets: Vec<usize>,
    /// First row and cone of every constraint, in program order.
    pub constraint_rows: Vec<(usize, RealCone)>,
}

/// Column-major upper-triangle position of `(row, col)` with `row ≤ col`.
pub(crate) fn svec_index(row: usize, col: usize) -> usize {
    col * (col + 1) / 2 + row
}

/// Sparse `svec(emb(B_p))` for every basis element of dimension `d`.
fn embedded_basis(d: usize) -> Vec<Vec<(usize, f64)>> {
    (0..d * d)
        .map(|p| {
            let b = basis_element(d, p);
            let mut out = Vec::new();
            for r in 0..d {
                for c in 0..d {
                    let v = b[(r, c)];
                    if v.re != 0.0 {
                        push_upper(&mut out, r, c, v.re);
                        push_upper(&mut out, r + d, c + d, v.re);
                    }
                    if v.im != 0.0 {
                        push_upper(&mut out, r, c + d, -v.im);
                        push_upper(&mut out, r + d, c, v.im);
                    }
                }
            }
            out
        })
        .collect()
}

fn push_upper(out: &mut Vec<(usize, f64)>, r: usize, c: usize, v: f64) {
    if r == c {
        out.push((svec_index(r, c), v));
    } else if r < c {
        out.push((svec_index(r, c), SQRT2 * v));
    }
}

/// `[[Re H, −Im H], [Im H, Re H]]`.
pub fn embed_operator(h: &Hermitian) -> DMatrix<f64> {
    embed_matrix(h.matrix())
}

pub(crate) fn embed_matrix(m: &CMatrix) -> DMatrix<f64> {
    let d = m.nrows();
    let mut out = DMatrix::zeros(2 * d, 2 * d);
    for r in 0..d {
        for c in 0..d {
            let v = m[(r, c)];
            out[(r, c)] = v.re;
            out[(r + d, c + d)] = v.re;
            out[(r, c + d)] = -v.im;
            out[(r + d, c)] = v.im;
        }
    }
    out
}

/// Sparse real expansion of each basis element of one block.
type BlockBasis = Vec<Vec<(usize, f64)>>;

struct Builder {
    rows: usize,
    a: Vec<(usize, usize, f64)>,
    b: Vec<f64>,
    cones: Vec<RealCone>,
    basis_cache: Vec<Option<BlockBasis>>,
}

impl Builder {
    fn basis(&mut self, d: usize) -> &Vec<Vec<(usize, f64)>> {
        if self.basis_cache.len() <= d {
            self.basis_cache.resize(d + 1, None);
        }
        self.basis_cache[d].get_or_insert_with(|| embedded_basis(d))
    }

    fn zero(&mut self, expr: &Expr, offsets: &[usize]) -> (usize, RealCone) {
        let start = self.rows;
        let m = expr.dim() * expr.dim();
        for term in expr.terms() {
            for &(row, col, v) in &term.entries {
                self.a.push((start + row, offsets[term.var] + col, v));
            }
        }
        self.b.extend(expr.constant_params().iter().map(|v| -v));
        self.push_cone(RealCone::Zero(m))
    }

    fn psd(&mut self, expr: &Expr, offsets: &[usize]) -> (usize, RealCone) {
        let start = self.rows;
        let d = expr.dim();
        if d == 1 {
            for term in expr.terms() {
                for &(_, col, v) in &term.entries {
                    self.a.push((start, offsets[term.var] + col, -v));
                }
            }
            self.b.push(expr.constant_params()[0]);
            return self.push_cone(RealCone::Nonneg(1));
        }
        let cone = RealCone::PsdTriangle(2 * d);
        let basis = self.basis(d).clone();
        let mut entries = Vec::new();
        for term in expr.terms() {
            for &(row, col, v) in &term.entries {
                for &(s, coeff) in &basis[row] {
                    entries.push((start + s, offsets[term.var] + col, -v * coeff));
                }
            }
        }
        self.a.extend(entries);
        let mut b = vec![0.0; cone.rows()];
        for (p, &v) in expr.constant_params().iter().enumerate() {
            if v != 0.0 {
                for &(s, coeff) in &basis[p] {
                    b[s] += v * coeff;
                }
            }
        }
        self.b.extend(b);
        self.push_cone(cone)
    }

    fn push_cone(&mut self, cone: RealCone) -> (usize, RealCone) {
        let start = self.rows;
        self.rows += cone.rows();
        self.cones.push(cone);
        (start, cone)
    }
}

/// Real symmetric form of a complex-Hermitian program.
pub fn embed_real(program: &ConicProgram) -> Embedding {
    let mut block_offsets = Vec::with_capacity(program.blocks().len());
    let mut num_vars = 0;
    for kind in program.blocks() {
        block_offsets.push(num_vars);
        num_vars += kind.param_count();
    }

    let sign = match program.sense {
        Sense::Min => 1.0,
        Sense::Max => -1.0,
    };
    let mut objective = vec![0.0; num_vars];
    for term in program.objective().terms() {
        for &(_, col, v) in &term.entries {
            objective[block_offsets[term.var] + col] += sign * v;
        }
    }
    let offset = sign * program.objective().constant_params()[0];

    let mut builder = Builder { rows: 0, a: Vec::new(), b: Vec::new(), cones: Vec::new(), basis_cache: Vec::new() };
    let mut constraint_rows = Vec::with_capacity(program.constraints().len());
    for c in program.constraints() {
        let placed = match c.kind {
            ConstraintKind::Zero => builder.zero(&c.expr, &block_offsets),
            ConstraintKind::Psd => builder.psd(&c.expr, &block_offsets),
        };
        constraint_rows.push(placed);
    }
    for (k, kind) in program.blocks().iter().enumerate() {
        match kind {
            BlockKind::NonnegScalar | BlockKind::PsdHermitian(_) => {
                let expr = Expr::identity(super::Var(k), kind.dim());
                builder.psd(&expr, &block_offsets);
            }
            BlockKind::FreeScalar | BlockKind::FreeHermitian(_) => {}
        }
    }

    Embedding {
        program: RealProgram {
            num_vars,
            objective,
            offset,
            negated: program.sense == Sense::Max,
            cones: builder.cones,
            a: builder.a,
            b: builder.b,
        },
        block_offsets,
        constraint_rows,
    }
}

/// Inverse of `svec` for a symmetric matrix of side `n`.
pub(crate) fn unsvec(n: usize, v: &[f64]) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    for c in 0..n {
        for r in 0..=c {
            let x = v[svec_index(r, c)];
            if r == c {
                m[(r, c)] = x;
            } else {
                m[(r, c)] = x / SQRT2;
                m[(c, r)] = x / SQRT2;
            }
        }
    }
    m
}
