//! Master problems of the cut loop.

use super::lps;
use super::{Algorithm, GenericRegretProblem, RegretConfig, RegretError, Scenario};
use crate::lp::{LpStatus, Sense};

/// An optimal master vertex: the candidate design, the epigraph value, and
/// (for `Ccg`) the per-scenario recourse blocks.
#[derive(Debug, Clone)]
pub struct MasterSolution {
    pub design: Vec<f64>,
    pub eta: f64,
    /// `c.x + eta`.
    pub objective: f64,
    pub recourse: Vec<Vec<f64>>,
}

/// Solves the cut-only master over the pooled scenarios.
pub fn master_cg(
    problem: &GenericRegretProblem,
    pool: &[Scenario],
    config: &RegretConfig,
) -> Result<MasterSolution, RegretError> {
    let lp = lps::master_cg_lp(problem, pool, config.eta_floor);
    let sol = solve_master(lp)?;
    let n_x = problem.n_x();
    Ok(MasterSolution {
        design: sol.0[..n_x].to_vec(),
        eta: sol.0[n_x],
        objective: sol.1,
        recourse: Vec::new(),
    })
}

/// Solves the master with one fresh recourse block per pooled scenario.
pub fn master_ccg(
    problem: &GenericRegretProblem,
    pool: &[Scenario],
    config: &RegretConfig,
) -> Result<MasterSolution, RegretError> {
    let lp = lps::master_ccg_lp(problem, pool, config.eta_floor);
    let sol = solve_master(lp)?;
    let n_x = problem.n_x();
    let n_y = problem.n_y();
    let recourse = (0..pool.len())
        .map(|l| {
            let base = n_x + 1 + l * n_y;
            sol.0[base..base + n_y].to_vec()
        })
        .collect();
    Ok(MasterSolution {
        design: sol.0[..n_x].to_vec(),
        eta: sol.0[n_x],
        objective: sol.1,
        recourse,
    })
}

pub fn master(
    problem: &GenericRegretProblem,
    algorithm: Algorithm,
    pool: &[Scenario],
    config: &RegretConfig,
) -> Result<MasterSolution, RegretError> {
    match algorithm {
        Algorithm::Cg => master_cg(problem, pool, config),
        Algorithm::Ccg => master_ccg(problem, pool, config),
    }
}

fn solve_master(lp: crate::lp::LinearProgram) -> Result<(Vec<f64>, f64), RegretError> {
    debug_assert_eq!(lp.sense(), Sense::Minimize);
    let sol = lp.solve()?;
    match sol.status {
        LpStatus::Optimal => Ok((sol.primal, sol.objective_value)),
        LpStatus::Infeasible => Err(RegretError::InfeasibleFirstStage(
            sol.witness.unwrap_or_default(),
        )),
        LpStatus::Unbounded => Err(RegretError::UnboundedMain(sol.witness.unwrap_or_default())),
    }
}
