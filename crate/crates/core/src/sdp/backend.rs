//! Adapter onto the Clarabel interior-point solver.

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettingsBuilder, DefaultSolver, IPSolver, NonnegativeConeT, PSDTriangleConeT, SolverStatus, SupportedConeT,
    ZeroConeT,
};
use nalgebra::DMatrix;

use super::embed::{embed_real, unsvec, RealCone, RealProgram};
use super::{from_params, ConicProgram, InfinitySource, Sense, Solution, SolverSettings, Status};
use crate::error::{Error, Result};
use crate::linalg::{c64, CMatrix, Hermitian};

/// Raw backend output for a real program.
#[derive(Clone, Debug)]
pub struct RealSolution {
    pub status: SolverStatus,
    pub x: Vec<f64>,
    pub z: Vec<f64>,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub iterations: u32,
}

/// Shorter steps and heavier regularization for the retry after a stall.
const CONSERVATIVE_STEP_FRACTION: f64 = 0.95;
const CONSERVATIVE_REGULARIZATION: f64 = 1e-7;

pub(crate) fn solve_real(program: &RealProgram, settings: &SolverSettings, conservative: bool) -> Result<RealSolution> {
    let n = program.num_vars;
    let m = program.num_rows();
    let (rows, (cols, vals)): (Vec<usize>, (Vec<usize>, Vec<f64>)) =
        program.a.iter().map(|&(i, j, v)| (i, (j, v))).unzip();
    let a = CscMatrix::new_from_triplets(m, n, rows, cols, vals);
    let p = CscMatrix::<f64>::zeros((n, n));
    let cones: Vec<SupportedConeT<f64>> = program
        .cones
        .iter()
        .map(|c| match *c {
            RealCone::Zero(k) => ZeroConeT(k),
            RealCone::Nonneg(k) => NonnegativeConeT(k),
            RealCone::PsdTriangle(k) => PSDTriangleConeT(k),
        })
        .collect();
    let backend_settings = DefaultSettingsBuilder::default()
        .verbose(false)
        .max_iter(settings.max_iterations)
        .tol_gap_abs(settings.gap_tol * 1e-2)
        .tol_gap_rel(settings.gap_tol * 1e-2)
        .tol_feas(settings.feasibility_tol * 1e-1)
        .chordal_decomposition_enable(false)
        .max_step_fraction(if conservative { CONSERVATIVE_STEP_FRACTION } else { 0.99 })
        .static_regularization_constant(if conservative { CONSERVATIVE_REGULARIZATION } else { 1e-8 })
        .build()
        .map_err(|e| Error::Solver(format!("backend settings: {e}")))?;
    let mut solver = DefaultSolver::new(&p, &program.objective, &a, &program.b, &cones, backend_settings)
        .map_err(|e| Error::Solver(format!("backend setup: {e:?}")))?;
    solver.solve();
    let s = &solver.solution;
    Ok(RealSolution {
        status: s.status,
        x: s.x.clone(),
        z: s.z.clone(),
        primal_objective: s.obj_val,
        dual_objective: s.obj_val_dual,
        primal_residual: s.r_prim,
        dual_residual: s.r_dual,
        iterations: s.iterations,
    })
}

/// A stalled run is accepted when its scaled residuals are within this
/// multiple of `feasibility_tol` and its gap within `gap_tol`.
pub const ALMOST_SOLVED_RESIDUAL_FACTOR: f64 = 100.0;

/// `offset` is the constant dropped from the objective, restored for the
/// relative gap.
fn accepted(raw: &RealSolution, settings: &SolverSettings, offset: f64) -> bool {
    let residual_cap = ALMOST_SOLVED_RESIDUAL_FACTOR * settings.feasibility_tol;
    let residuals_ok = raw.primal_residual <= residual_cap && raw.dual_residual <= residual_cap;
    let gap = (raw.primal_objective - raw.dual_objective).abs();
    let gap_ok = gap <= settings.gap_tol * (1.0 + (raw.primal_objective + offset).abs());
    match raw.status {
        SolverStatus::Solved => true,
        SolverStatus::AlmostSolved => residuals_ok && gap_ok,
        _ => false,
    }
}

fn is_certificate(status: SolverStatus) -> bool {
    matches!(
        status,
        SolverStatus::PrimalInfeasible
            | SolverStatus::AlmostPrimalInfeasible
            | SolverStatus::DualInfeasible
            | SolverStatus::AlmostDualInfeasible
    )
}

/// Solves a complex-Hermitian program.
pub fn solve(program: &ConicProgram, settings: &SolverSettings) -> Result<Solution> {
    settings.validate()?;
    let embedding = embed_real(program);
    let real = &embedding.program;
    let first = solve_real(real, settings, false)?;
    let raw = if accepted(&first, settings, real.offset) || is_certificate(first.status) {
        first
    } else {
        // Stalls are often cured by a more cautious path.
        let retry = solve_real(real, settings, true)?;
        if accepted(&retry, settings, real.offset) || is_certificate(retry.status) {
            retry
        } else {
            first
        }
    };

    let sign = if real.negated { -1.0 } else { 1.0 };
    let primal = sign * (raw.primal_objective + real.offset);
    let dual = sign * (raw.dual_objective + real.offset);
    let gap = (raw.primal_objective - raw.dual_objective).abs();
    let accepted = accepted(&raw, settings, real.offset);

    let infinite_sup = match program.sense {
        Sense::Min => f64::NEG_INFINITY,
        Sense::Max => f64::INFINITY,
    };
    let (mut status, mut objective, mut infinity) = match raw.status {
        SolverStatus::Solved => (Status::Optimal, primal, None),
        SolverStatus::AlmostSolved if accepted => (Status::Optimal, primal, None),
        SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => {
            (Status::Infeasible, -infinite_sup, None)
        }
        SolverStatus::DualInfeasible | SolverStatus::AlmostDualInfeasible => {
            (Status::Unbounded, infinite_sup, Some(InfinitySource::SolverDeclared))
        }
        _ => (Status::Inaccurate, primal, None),
    };
    if matches!(status, Status::Optimal | Status::Inaccurate) && objective.abs() > settings.unbounded_threshold {
        objective = objective.signum() * f64::INFINITY;
        status = Status::Unbounded;
        infinity = Some(InfinitySource::ThresholdInferred);
    }

    let primal_values = program
        .blocks()
        .iter()
        .zip(&embedding.block_offsets)
        .map(|(kind, &off)| {
            let d = kind.dim();
            Hermitian::symmetrized(from_params(d, &raw.x[off..off + d * d]), vec![d])
        })
        .collect();

    let dual_values = embedding
        .constraint_rows
        .iter()
        .map(|&(start, cone)| decode_dual(cone, &raw.z[start..start + cone.rows()]))
        .collect();

    Ok(Solution {
        status,
        primal_values,
        dual_values,
        objective_value: objective,
        dual_objective: dual,
        duality_gap: gap,
        infinity,
        iterations: raw.iterations,
    })
}

fn decode_dual(cone: RealCone, z: &[f64]) -> Hermitian {
    match cone {
        RealCone::Zero(m) => {
            let d = (m as f64).sqrt().round() as usize;
            Hermitian::symmetrized(from_params(d, z), vec![d])
        }
        RealCone::Nonneg(_) => Hermitian::diagonal(&[z[0]]),
        RealCone::PsdTriangle(n) => {
            let zr: DMatrix<f64> = unsvec(n, z);
            let d = n / 2;
            let w =
                CMatrix::from_fn(d, d, |r, c| c64(zr[(r, c)] + zr[(r + d, c + d)], zr[(r + d, c)] - zr[(r, c + d)]));
            Hermitian::symmetrized(w, vec![d])
        }
    }
}
