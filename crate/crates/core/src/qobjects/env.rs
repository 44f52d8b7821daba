use serde::{Deserialize, Serialize};

use super::{apply_on_factors, Channel, ChannelBox, QState};
use crate::error::{Error, Result};
use crate::linalg::{gamma_operator, kron, permute_subsystems, Hermitian};
use crate::state_div::trace_distance;

/// Seizing data: a common input `τ_RA` and decoder `D_{RB→E}`.
#[derive(Clone, Debug, PartialEq)]
pub struct SeizeData {
    /// State over `(R, A)`; its last factor must match the box input.
    pub input: QState,
    pub decoder: Channel,
}

/// Box realized as `ω ↦ P(ω ⊗ ρ_E)` and `ω ↦ P(ω ⊗ σ_E)`.
#[derive(Clone, Debug, PartialEq)]
pub struct EnvBox {
    /// Interaction `P_{AE→B}` with input factor order `(A, E)`.
    pub interaction: Channel,
    pub env_states: (QState, QState),
    pub seize: Option<SeizeData>,
}

impl EnvBox {
    pub fn new(interaction: Channel, rho_e: QState, sigma_e: QState, seize: Option<SeizeData>) -> Result<Self> {
        let de = rho_e.dim();
        if sigma_e.dim() != de || !interaction.in_dim().is_multiple_of(de) {
            return Err(Error::Dimension(format!(
                "interaction input {} incompatible with environment dimension {de}",
                interaction.in_dim()
            )));
        }
        Ok(Self { interaction, env_states: (rho_e, sigma_e), seize })
    }

    pub fn env_dim(&self) -> usize {
        self.env_states.0.dim()
    }

    pub fn in_dim(&self) -> usize {
        self.interaction.in_dim() / self.env_dim()
    }
}

/// Assembles the two channels in Choi form.
pub fn env_realize(e: &EnvBox) -> Result<ChannelBox> {
    let da = e.in_dim();
    let de = e.env_dim();
    let db = e.interaction.out_dim();
    let realize = |env: &QState| -> Result<Channel> {
        let env = Hermitian::symmetrized(env.matrix().clone(), vec![de]);
        let joint = kron(&gamma_operator(da), &env);
        let (out, _) = apply_on_factors(e.interaction.choi().matrix(), db, joint.matrix(), joint.dims(), &[1, 2]);
        Channel::from_choi(out, da, db)
    };
    ChannelBox::new(realize(&e.env_states.0)?, realize(&e.env_states.1)?)
}

/// `P(ζ_AE) = N(⟨0|ζ|0⟩_E) + M(⟨1|ζ|1⟩_E)` with orthogonal environment states.
pub fn trivial_env_realization(b: &ChannelBox) -> Result<EnvBox> {
    let (da, db) = (b.in_dim(), b.out_dim());
    let zero = Hermitian::basis_projector(2, 0);
    let one = Hermitian::basis_projector(2, 1);
    // (A, B, E) → (A, E, B)
    let part = |ch: &Channel, flag: &Hermitian| permute_subsystems(&kron(ch.choi(), flag), &[0, 2, 1]);
    let choi = part(&b.first, &zero)?.add(&part(&b.second, &one)?)?;
    let interaction = Channel::from_choi(choi.into_matrix(), 2 * da, db)?;
    EnvBox::new(interaction, QState::basis(2, 0), QState::basis(2, 1), None)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeizeReport {
    pub residual_first: f64,
    pub residual_second: f64,
    pub passes: bool,
}

pub const SEIZE_TOL: f64 = 1e-6;

/// Checks `D((id ⊗ N)(τ)) = ρ_E` and `D((id ⊗ M)(τ)) = σ_E` in trace distance.
pub fn env_seize_check(e: &EnvBox) -> Result<SeizeReport> {
    let seize = e.seize.as_ref().ok_or_else(|| Error::Seize("no seize data supplied".into()))?;
    let realized = env_realize(e)?;
    let tau = seize.input.density();
    let residual = |ch: &Channel, target: &QState| -> Result<f64> {
        let out = ch.apply_operator(tau)?;
        if seize.decoder.in_dim() != out.dim() || seize.decoder.out_dim() != target.dim() {
            return Err(Error::Dimension("decoder does not fit the box output".into()));
        }
        let all: Vec<usize> = (0..out.dims().len()).collect();
        let (decoded, _) =
            apply_on_factors(seize.decoder.choi().matrix(), target.dim(), out.matrix(), out.dims(), &all);
        let decoded = QState::new(Hermitian::symmetrized(decoded, vec![target.dim()]))?;
        trace_distance(&decoded, target)
    };
    let residual_first = residual(&realized.first, &e.env_states.0)?;
    let residual_second = residual(&realized.second, &e.env_states.1)?;
    let passes = residual_first <= SEIZE_TOL && residual_second <= SEIZE_TOL;
    Ok(SeizeReport { residual_first, residual_second, passes })
}
