use serde::{Deserialize, Serialize};

use super::{apply_on_factors, Channel};
use crate::error::{Error, Result};
use crate::linalg::{
    eig_values, gamma_operator, kron, max_abs, partial_trace, permute_subsystems, CMatrix, Hermitian, ZERO,
};

/// Superchannel mapping channels `A → B` to channels `C → D`.
///
/// The Choi operator lives on the ordered factors `(C, R_B, A, D)`:
/// outer input, reference of the inner output, inner input, outer output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SuperchannelRepr", into = "SuperchannelRepr")]
pub struct Superchannel {
    dims: [usize; 4],
    choi: Hermitian,
}

/// Wire form `{"dims": [dC, dB, dA, dD], "choi": [[[re, im], ...], ...]}`.
#[derive(Serialize, Deserialize)]
struct SuperchannelRepr {
    dims: [usize; 4],
    #[serde(with = "crate::linalg::pairs")]
    choi: CMatrix,
}

impl From<Superchannel> for SuperchannelRepr {
    fn from(theta: Superchannel) -> Self {
        Self { dims: theta.dims, choi: theta.choi.into_matrix() }
    }
}

impl TryFrom<SuperchannelRepr> for Superchannel {
    type Error = Error;

    fn try_from(repr: SuperchannelRepr) -> Result<Self> {
        Superchannel::new(repr.choi, repr.dims)
    }
}

impl Superchannel {
    /// `dims = [d_C, d_B, d_A, d_D]`. Checks shape and hermiticity; use
    /// [`validate_superchannel`] for the physical constraints.
    pub fn new(matrix: CMatrix, dims: [usize; 4]) -> Result<Self> {
        if dims.contains(&0) {
            return Err(Error::Dimension("superchannel dimensions must be positive".into()));
        }
        let choi = Hermitian::with_tol(matrix, dims.to_vec(), 1e-8)?;
        Ok(Self { dims, choi })
    }

    pub fn dims(&self) -> [usize; 4] {
        self.dims
    }

    pub fn outer_in(&self) -> usize {
        self.dims[0]
    }

    pub fn inner_out(&self) -> usize {
        self.dims[1]
    }

    pub fn inner_in(&self) -> usize {
        self.dims[2]
    }

    pub fn outer_out(&self) -> usize {
        self.dims[3]
    }

    pub fn choi(&self) -> &Hermitian {
        &self.choi
    }

    /// The superchannel that leaves every channel `A → B` unchanged.
    pub fn identity(d_in: usize, d_out: usize) -> Self {
        let pre = Channel::identity(d_in);
        let post = Channel::identity(d_out);
        superchannel_from_pre_post(&pre, &post, d_in, d_out).expect("identity dims")
    }
}

/// Builds `Θ(N) = post ∘ (N ⊗ id_M) ∘ pre`.
///
/// `pre` maps `C → A ⊗ M` (factor order `(A, M)`), `post` maps `B ⊗ M → D`
/// (factor order `(B, M)`).
pub fn superchannel_from_pre_post(
    pre: &Channel,
    post: &Channel,
    inner_in: usize,
    inner_out: usize,
) -> Result<Superchannel> {
    if inner_in == 0 || !pre.out_dim().is_multiple_of(inner_in) {
        return Err(Error::Dimension(format!("pre output {} is not a multiple of {inner_in}", pre.out_dim())));
    }
    let memory = pre.out_dim() / inner_in;
    if post.in_dim() != inner_out * memory {
        return Err(Error::Dimension(format!(
            "post input {} does not match {inner_out} x memory {memory}",
            post.in_dim()
        )));
    }
    let d_c = pre.in_dim();
    let d_d = post.out_dim();
    // Γ^pre on (R_C, A, M) ⊗ Γ on (R_B, B)
    let pre_choi = pre.choi().clone().with_dims(vec![d_c, inner_in, memory])?;
    let joint = kron(&pre_choi, &gamma_operator(inner_out));
    // post on (B, M): factors 4 and 2 → (R_C, A, R_B, D)
    let (out, _) = apply_on_factors(post.choi().matrix(), d_d, joint.matrix(), joint.dims(), &[4, 2]);
    let arranged =
        permute_subsystems(&Hermitian::symmetrized(out, vec![d_c, inner_in, inner_out, d_d]), &[0, 2, 1, 3])?;
    Superchannel::new(arranged.into_matrix(), [d_c, inner_out, inner_in, d_d])
}

/// `Tr_{AB}[(Γ_N ⊗ I) Γ_Θ]` with `Γ_N`'s `(R_A, B)` paired against `Θ`'s
/// `(A, R_B)`. Linear in `theta`; also used inside the transformation SDP.
pub fn contract_superchannel(theta: &CMatrix, dims: [usize; 4], choi_n: &CMatrix) -> CMatrix {
    let [dc, db, da, dd] = dims;
    let idx = |c: usize, b: usize, a: usize, d: usize| ((c * db + b) * da + a) * dd + d;
    let mut out = CMatrix::from_element(dc * dd, dc * dd, ZERO);
    for a in 0..da {
        for b in 0..db {
            for a2 in 0..da {
                for b2 in 0..db {
                    let w = choi_n[(a * db + b, a2 * db + b2)];
                    if w == ZERO {
                        continue;
                    }
                    for c in 0..dc {
                        for d in 0..dd {
                            let row = idx(c, b, a, d);
                            for c2 in 0..dc {
                                for d2 in 0..dd {
                                    out[(c * dd + d, c2 * dd + d2)] += w * theta[(row, idx(c2, b2, a2, d2))];
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

pub fn apply_superchannel(theta: &Superchannel, n: &Channel) -> Result<Channel> {
    if n.in_dim() != theta.inner_in() || n.out_dim() != theta.inner_out() {
        return Err(Error::Dimension(format!(
            "superchannel expects {}→{} channels, got {}→{}",
            theta.inner_in(),
            theta.inner_out(),
            n.in_dim(),
            n.out_dim()
        )));
    }
    let out = contract_superchannel(theta.choi.matrix(), theta.dims, n.choi().matrix());
    Channel::from_choi_unchecked(out, theta.outer_in(), theta.outer_out())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuperchannelReport {
    pub min_eigenvalue: f64,
    pub tp_residual: f64,
    pub ns_residual: f64,
    pub passes: bool,
}

pub fn validate_superchannel(theta: &Superchannel, tol: f64) -> SuperchannelReport {
    let [dc, db, _, _] = theta.dims;
    let min_eigenvalue = eig_values(&theta.choi)[0];
    let cb = partial_trace(&theta.choi, &[0, 1]).expect("four factors");
    let tp_residual = max_abs(&(cb.matrix() - CMatrix::identity(dc * db, dc * db)));
    let cba = partial_trace(&theta.choi, &[0, 1, 2]).expect("four factors");
    let ca = partial_trace(&theta.choi, &[0, 2]).expect("four factors");
    let spread = kron(&ca, &Hermitian::identity(vec![db]).scale(1.0 / db as f64));
    let spread = permute_subsystems(&spread, &[0, 2, 1]).expect("three factors");
    let ns_residual = max_abs(&(cba.matrix() - spread.matrix()));
    let passes = min_eigenvalue >= -tol && tp_residual <= tol && ns_residual <= tol;
    SuperchannelReport { min_eigenvalue, tp_residual, ns_residual, passes }
}
