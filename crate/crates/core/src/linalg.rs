//! Dense complex linear algebra on tensor-product spaces.
//!
//! Operators carry their subsystem dimensions; basis ordering is row-major
//! over the factors, so the last factor varies fastest.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

pub const DEFAULT_HERMITICITY_TOL: f64 = 1e-10;
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };

pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Hermitian operator with tensor-factor metadata.
#[derive(Clone, Debug, PartialEq)]
pub struct Hermitian {
    matrix: CMatrix,
    dims: Vec<usize>,
}

impl Hermitian {
    /// Validates hermiticity at [`DEFAULT_HERMITICITY_TOL`] and symmetrizes.
    pub fn new(matrix: CMatrix, dims: Vec<usize>) -> Result<Self> {
        Self::with_tol(matrix, dims, DEFAULT_HERMITICITY_TOL)
    }

    pub fn with_tol(matrix: CMatrix, dims: Vec<usize>, tol: f64) -> Result<Self> {
        check_dims(&matrix, &dims)?;
        let deviation = hermiticity_deviation(&matrix);
        if !(deviation <= tol) {
            return Err(Error::NotHermitian { deviation, tol });
        }
        Ok(Self::symmetrized(matrix, dims))
    }

    /// Takes the Hermitian part `(M + M†)/2` without validation.
    ///
    /// Panics if `dims` does not match the matrix shape.
    pub fn symmetrized(matrix: CMatrix, dims: Vec<usize>) -> Self {
        check_dims(&matrix, &dims).expect("subsystem dims must match matrix shape");
        let adj = matrix.adjoint();
        let matrix = (matrix + adj).scale(0.5);
        Self { matrix, dims }
    }

    pub fn single(matrix: CMatrix) -> Result<Self> {
        let d = matrix.nrows();
        Self::new(matrix, vec![d])
    }

    pub fn identity(dims: Vec<usize>) -> Self {
        let d = dims.iter().product();
        Self { matrix: CMatrix::identity(d, d), dims }
    }

    pub fn zeros(dims: Vec<usize>) -> Self {
        let d = dims.iter().product();
        Self { matrix: CMatrix::zeros(d, d), dims }
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let d = values.len();
        let mut matrix = CMatrix::zeros(d, d);
        for (i, v) in values.iter().enumerate() {
            matrix[(i, i)] = c64(*v, 0.0);
        }
        Self { matrix, dims: vec![d] }
    }

    /// `|v⟩⟨v|` for a (not necessarily normalized) vector.
    pub fn projector(vector: &[C64]) -> Self {
        let d = vector.len();
        let mut matrix = CMatrix::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                matrix[(i, j)] = vector[i] * vector[j].conj();
            }
        }
        Self { matrix, dims: vec![d] }
    }

    pub fn basis_projector(d: usize, index: usize) -> Self {
        let mut matrix = CMatrix::zeros(d, d);
        matrix[(index, index)] = ONE;
        Self { matrix, dims: vec![d] }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    /// Relabels the factor structure; the product must be unchanged.
    pub fn with_dims(self, dims: Vec<usize>) -> Result<Self> {
        check_dims(&self.matrix, &dims)?;
        Ok(Self { matrix: self.matrix, dims })
    }

    pub fn trace(&self) -> f64 {
        self.matrix.diagonal().iter().map(|z| z.re).sum()
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self { matrix: self.matrix.scale(factor), dims: self.dims.clone() }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_shape(other)?;
        Ok(Self { matrix: &self.matrix + &other.matrix, dims: self.dims.clone() })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.same_shape(other)?;
        Ok(Self { matrix: &self.matrix - &other.matrix, dims: self.dims.clone() })
    }

    /// `Re Tr[self · other]`.
    pub fn inner(&self, other: &Self) -> f64 {
        trace_product(&self.matrix, &other.matrix)
    }

    /// `X · self · X†`, keeping the factor structure of `self` when `X` is square.
    pub fn congruence(&self, x: &CMatrix) -> Self {
        let matrix = x * &self.matrix * x.adjoint();
        let dims = if x.nrows() == self.dim() { self.dims.clone() } else { vec![x.nrows()] };
        Self::symmetrized(matrix, dims)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        eig_values(self).first().copied().unwrap_or(0.0)
    }

    pub fn max_eigenvalue(&self) -> f64 {
        eig_values(self).last().copied().unwrap_or(0.0)
    }

    fn same_shape(&self, other: &Self) -> Result<()> {
        if self.dims != other.dims {
            return Err(Error::Dimension(format!("subsystem dims {:?} vs {:?}", self.dims, other.dims)));
        }
        Ok(())
    }
}

fn check_dims(matrix: &CMatrix, dims: &[usize]) -> Result<()> {
    if matrix.nrows() != matrix.ncols() {
        return Err(Error::Dimension(format!("matrix is {}x{}, not square", matrix.nrows(), matrix.ncols())));
    }
    let product = dims.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d));
    if product != Some(matrix.nrows()) || dims.is_empty() {
        return Err(Error::Dimension(format!("subsystem dims {:?} do not multiply to {}", dims, matrix.nrows())));
    }
    Ok(())
}

/// `max |M − M†|` entrywise.
pub fn hermiticity_deviation(matrix: &CMatrix) -> f64 {
    let n = matrix.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((matrix[(i, j)] - matrix[(j, i)].conj()).norm());
        }
    }
    worst
}

/// `Re Tr[A B]`.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for k in 0..a.ncols() {
            let x = a[(i, k)];
            let y = b[(k, i)];
            acc += x.re * y.re - x.im * y.im;
        }
    }
    acc
}

pub fn max_abs(matrix: &CMatrix) -> f64 {
    matrix.iter().fold(0.0f64, |m, z| m.max(z.norm()))
}

pub fn kron_matrix(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn kron(a: &Hermitian, b: &Hermitian) -> Hermitian {
    let mut dims = a.dims.clone();
    dims.extend_from_slice(&b.dims);
    Hermitian { matrix: a.matrix.kronecker(&b.matrix), dims }
}

pub fn kron_all(factors: &[&Hermitian]) -> Hermitian {
    let mut iter = factors.iter();
    let first = (*iter.next().expect("at least one factor")).clone();
    iter.fold(first, |acc, f| kron(&acc, f))
}

/// Row-major strides for a list of factor dimensions.
fn strides(dims: &[usize]) -> Vec<usize> {
    let mut out = vec![1; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        out[k] = out[k + 1] * dims[k + 1];
    }
    out
}

/// Flat offsets of every multi-index over `factors`, enumerated row-major in
/// the order given, measured with the strides of the full space.
fn offsets(dims: &[usize], factors: &[usize]) -> Vec<usize> {
    let st = strides(dims);
    let mut out = vec![0usize];
    for &f in factors {
        let mut next = Vec::with_capacity(out.len() * dims[f]);
        for base in &out {
            for digit in 0..dims[f] {
                next.push(base + digit * st[f]);
            }
        }
        out = next;
    }
    out
}

fn check_indices(indices: &[usize], count: usize) -> Result<()> {
    let mut seen = vec![false; count];
    for &i in indices {
        if i >= count {
            return Err(Error::IndexOutOfRange { index: i, count });
        }
        if seen[i] {
            return Err(Error::Dimension(format!("subsystem {i} listed twice")));
        }
        seen[i] = true;
    }
    Ok(())
}

/// Partial trace of a square matrix, keeping `keep` (in original order).
pub fn partial_trace_matrix(matrix: &CMatrix, dims: &[usize], keep: &[usize]) -> Result<CMatrix> {
    check_indices(keep, dims.len())?;
    let mut kept: Vec<usize> = keep.to_vec();
    kept.sort_unstable();
    let traced: Vec<usize> = (0..dims.len()).filter(|i| !kept.contains(i)).collect();
    let ok = offsets(dims, &kept);
    let ot = offsets(dims, &traced);
    let n = ok.len();
    let mut out = CMatrix::zeros(n, n);
    for (i, &ri) in ok.iter().enumerate() {
        for (j, &cj) in ok.iter().enumerate() {
            let mut acc = ZERO;
            for &t in &ot {
                acc += matrix[(ri + t, cj + t)];
            }
            out[(i, j)] = acc;
        }
    }
    Ok(out)
}

pub fn partial_trace(h: &Hermitian, keep: &[usize]) -> Result<Hermitian> {
    let matrix = partial_trace_matrix(&h.matrix, &h.dims, keep)?;
    let mut kept: Vec<usize> = keep.to_vec();
    kept.sort_unstable();
    let dims: Vec<usize> = if kept.is_empty() { vec![1] } else { kept.iter().map(|&k| h.dims[k]).collect() };
    Ok(Hermitian::symmetrized(matrix, dims))
}

/// Reorders tensor factors: factor `perm[p]` of the input becomes factor `p`.
pub fn permute_matrix(matrix: &CMatrix, dims: &[usize], perm: &[usize]) -> Result<CMatrix> {
    if perm.len() != dims.len() {
        return Err(Error::Dimension(format!("permutation of length {} for {} subsystems", perm.len(), dims.len())));
    }
    check_indices(perm, dims.len())?;
    let off = offsets(dims, perm);
    let n = off.len();
    let mut out = CMatrix::zeros(n, n);
    for (i, &ri) in off.iter().enumerate() {
        for (j, &cj) in off.iter().enumerate() {
            out[(i, j)] = matrix[(ri, cj)];
        }
    }
    Ok(out)
}

pub fn permute_subsystems(h: &Hermitian, perm: &[usize]) -> Result<Hermitian> {
    let matrix = permute_matrix(&h.matrix, &h.dims, perm)?;
    let dims = perm.iter().map(|&p| h.dims[p]).collect();
    Ok(Hermitian { matrix, dims })
}

/// Transpose on the listed tensor factors only.
pub fn partial_transpose_matrix(matrix: &CMatrix, dims: &[usize], targets: &[usize]) -> Result<CMatrix> {
    check_indices(targets, dims.len())?;
    let rest: Vec<usize> = (0..dims.len()).filter(|i| !targets.contains(i)).collect();
    let on = offsets(dims, &rest);
    let ot = offsets(dims, targets);
    let n = matrix.nrows();
    let mut out = CMatrix::zeros(n, n);
    for &a in &on {
        for &b in &on {
            for &x in &ot {
                for &y in &ot {
                    out[(a + x, b + y)] = matrix[(a + y, b + x)];
                }
            }
        }
    }
    Ok(out)
}

pub fn transpose_subsystem(h: &Hermitian, targets: &[usize]) -> Result<Hermitian> {
    let matrix = partial_transpose_matrix(&h.matrix, &h.dims, targets)?;
    Ok(Hermitian { matrix, dims: h.dims.clone() })
}

/// Eigendecomposition with ascending eigenvalues.
#[derive(Clone, Debug)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl Eigen {
    pub fn reconstruct(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for j in 0..n {
            let w = f(self.values[j]);
            for i in 0..n {
                scaled[(i, j)] *= w;
            }
        }
        scaled * self.vectors.adjoint()
    }
}

pub fn eig_hermitian(h: &Hermitian) -> Eigen {
    let decomposition = h.matrix.clone().symmetric_eigen();
    let n = h.dim();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| decomposition.eigenvalues[a].total_cmp(&decomposition.eigenvalues[b]));
    let values = order.iter().map(|&k| decomposition.eigenvalues[k]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        vectors.set_column(col, &decomposition.eigenvectors.column(k));
    }
    Eigen { values, vectors }
}

/// Validating variant taking a raw matrix.
pub fn eig_matrix(matrix: &CMatrix) -> Result<Eigen> {
    let h = Hermitian::single(matrix.clone())?;
    Ok(eig_hermitian(&h))
}

pub fn eig_values(h: &Hermitian) -> Vec<f64> {
    let mut values: Vec<f64> = h.matrix.clone().symmetric_eigenvalues().iter().copied().collect();
    values.sort_by(f64::total_cmp);
    values
}

/// Projector onto eigenvectors with eigenvalue above `rank_tol`.
pub fn support_projector(h: &Hermitian, rank_tol: f64) -> Result<Hermitian> {
    let eigen = eig_hermitian(h);
    if let Some(&min) = eigen.values.first() {
        if min < -rank_tol.max(1e3 * rank_tol) {
            return Err(Error::NotPositive { min_eig: min, tol: rank_tol });
        }
    }
    let matrix = eigen.reconstruct(|v| if v > rank_tol { 1.0 } else { 0.0 });
    Ok(Hermitian::symmetrized(matrix, h.dims.clone()))
}

pub fn rank(h: &Hermitian, rank_tol: f64) -> usize {
    eig_values(h).iter().filter(|&&v| v > rank_tol).count()
}

/// `V f(Λ) V†`. With `support = Some(tol)`, eigenvalues of magnitude at most
/// `tol` map to zero instead of being passed to `f`.
pub fn spectral_fn(h: &Hermitian, f: impl Fn(f64) -> f64, support: Option<f64>) -> Result<Hermitian> {
    let eigen = eig_hermitian(h);
    let mut mapped = Vec::with_capacity(eigen.values.len());
    for &v in &eigen.values {
        let w = match support {
            Some(tol) if v.abs() <= tol => 0.0,
            _ => f(v),
        };
        if !w.is_finite() {
            return Err(Error::SpectralDomain(v));
        }
        mapped.push(w);
    }
    let eigen = Eigen { values: mapped, vectors: eigen.vectors };
    Ok(Hermitian::symmetrized(eigen.reconstruct(|v| v), h.dims.clone()))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Norms {
    pub operator: f64,
    pub trace: f64,
}

pub fn norms(h: &Hermitian) -> Norms {
    let values = eig_values(h);
    Norms { operator: values.iter().fold(0.0f64, |m, v| m.max(v.abs())), trace: values.iter().map(|v| v.abs()).sum() }
}

pub fn trace_norm(h: &Hermitian) -> f64 {
    norms(h).trace
}

/// Unnormalized maximally entangled vector `Σ_i |i⟩|i⟩`.
pub fn gamma_vector(d: usize) -> Vec<C64> {
    let mut v = vec![ZERO; d * d];
    for i in 0..d {
        v[i * d + i] = ONE;
    }
    v
}

/// `|Γ⟩⟨Γ|` on `(R, A)` with `R ≅ A`.
pub fn gamma_operator(d: usize) -> Hermitian {
    Hermitian::projector(&gamma_vector(d)).with_dims(vec![d, d]).expect("d*d")
}

/// Ordered list of (row, col, value) pairs with nested `[re, im]` layout used
/// for serialization.
pub fn to_pairs(matrix: &CMatrix) -> Vec<Vec<[f64; 2]>> {
    (0..matrix.nrows()).map(|i| (0..matrix.ncols()).map(|j| [matrix[(i, j)].re, matrix[(i, j)].im]).collect()).collect()
}

pub fn from_pairs(rows: &[Vec<[f64; 2]>]) -> Result<CMatrix> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, |r| r.len());
    if nrows == 0 || ncols == 0 {
        return Err(Error::Dimension("empty matrix".into()));
    }
    let mut m = CMatrix::zeros(nrows, ncols);
    for (i, row) in rows.iter().enumerate() {
        if row.len() != ncols {
            return Err(Error::Dimension(format!("row {i} has {} entries, expected {ncols}", row.len())));
        }
        for (j, [re, im]) in row.iter().enumerate() {
            if !re.is_finite() || !im.is_finite() {
                return Err(Error::Parameter(format!("non-finite entry at ({i}, {j})")));
            }
            m[(i, j)] = c64(*re, *im);
        }
    }
    Ok(m)
}

/// Serde adapter for [`CMatrix`] as nested `[re, im]` arrays.
pub mod pairs {
    use super::*;
    use serde::{de::Error as _, Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &CMatrix, s: S) -> std::result::Result<S::Ok, S::Error> {
        to_pairs(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<CMatrix, D::Error> {
        let rows = Vec::<Vec<[f64; 2]>>::deserialize(d)?;
        from_pairs(&rows).map_err(D::Error::custom)
    }
}
