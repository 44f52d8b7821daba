use std::ops::{Add, Mul, Neg, Sub};

use super::{basis_element, to_params, Var};
use crate::linalg::{CMatrix, Hermitian};

const DROP_TOL: f64 = 1e-15;

/// Sparse real-linear map from one block's parameters to the parameters of
/// an expression: `(row, col, value)` triplets.
#[derive(Clone, Debug)]
pub(crate) struct Term {
    pub var: usize,
    pub entries: Vec<(usize, usize, f64)>,
}

/// Affine Hermitian-valued expression `constant + Σ L_k(X_k)`.
#[derive(Clone, Debug)]
pub struct Expr {
    dim: usize,
    constant: Vec<f64>,
    terms: Vec<Term>,
}

impl Expr {
    pub fn zero(dim: usize) -> Self {
        Self { dim, constant: vec![0.0; dim * dim], terms: Vec::new() }
    }

    pub fn constant(h: &Hermitian) -> Self {
        Self::constant_matrix(h.matrix())
    }

    pub fn constant_matrix(m: &CMatrix) -> Self {
        Self { dim: m.nrows(), constant: to_params(m), terms: Vec::new() }
    }

    pub fn scalar(value: f64) -> Self {
        Self { dim: 1, constant: vec![value], terms: Vec::new() }
    }

    pub(crate) fn identity(var: Var, dim: usize) -> Self {
        let entries = (0..dim * dim).map(|p| (p, p, 1.0)).collect();
        Self { dim, constant: vec![0.0; dim * dim], terms: vec![Term { var: var.0, entries }] }
    }

    pub(crate) fn from_map(var: Var, in_dim: usize, out_dim: usize, map: impl Fn(&CMatrix) -> CMatrix) -> Self {
        let mut entries = Vec::new();
        for col in 0..in_dim * in_dim {
            let image = map(&basis_element(in_dim, col));
            assert_eq!(image.nrows(), out_dim, "map output has wrong dimension");
            for (row, v) in to_params(&image).into_iter().enumerate() {
                if v.abs() > DROP_TOL {
                    entries.push((row, col, v));
                }
            }
        }
        Self { dim: out_dim, constant: vec![0.0; out_dim * out_dim], terms: vec![Term { var: var.0, entries }] }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub(crate) fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub(crate) fn constant_params(&self) -> &[f64] {
        &self.constant
    }

    pub fn is_constant(&self) -> bool {
        self.terms.iter().all(|t| t.entries.is_empty())
    }

    /// Parameter vector of the expression at the given block parameters.
    pub fn evaluate(&self, block_params: &[Vec<f64>]) -> Vec<f64> {
        let mut out = self.constant.clone();
        for term in &self.terms {
            let x = &block_params[term.var];
            for &(row, col, v) in &term.entries {
                out[row] += v * x[col];
            }
        }
        out
    }

    pub fn scaled(mut self, factor: f64) -> Self {
        self.constant.iter_mut().for_each(|v| *v *= factor);
        for term in &mut self.terms {
            term.entries.iter_mut().for_each(|e| e.2 *= factor);
        }
        self
    }

    fn combine(mut self, other: Self, sign: f64) -> Self {
        assert_eq!(self.dim, other.dim, "adding expressions of different dimension");
        for (a, b) in self.constant.iter_mut().zip(&other.constant) {
            *a += sign * b;
        }
        for mut term in other.terms {
            term.entries.iter_mut().for_each(|e| e.2 *= sign);
            self.terms.push(term);
        }
        self
    }
}

impl Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        self.combine(rhs, 1.0)
    }
}

impl Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        self.combine(rhs, -1.0)
    }
}

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        self.scaled(-1.0)
    }
}

impl Mul<f64> for Expr {
    type Output = Expr;
    fn mul(self, rhs: f64) -> Expr {
        self.scaled(rhs)
    }
}
