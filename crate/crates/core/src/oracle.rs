//! Brute-force verification oracle.
//!
//! Lays a lattice over the effective price components (those the cost map
//! actually touches), collects candidate designs from the capped
//! cost-minimal LP at every lattice point plus every box corner, and
//! evaluates each candidate's worst regret over the lattice by plain LP
//! solves. The result upper-bounds the true min-max value on the candidate
//! side and under-samples the price side by at most a Lipschitz-style
//! slack, which is reported alongside the value.
//!
//! This path shares only the LP kernel and the model compiler with the
//! cut-generation engine; none of the master/subproblem machinery is used.

use crate::model::ModelInstance;
use crate::regret::{lps, GenericRegretProblem};
use crate::scalarize::{self, ComparatorMode};
use crate::uncertainty::PriceBox;
use crate::lp::{BasisHint, LinearProgram, LpStatus};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("lattice would need {points} evaluations (cap {cap}); reduce grid_n or free prices")]
    TooLarge { points: usize, cap: usize },
    #[error("grid_n must be at least 2, got {0}")]
    GridTooCoarse(usize),
    #[error(transparent)]
    Scalarize(#[from] scalarize::ScalarizeError),
    #[error(transparent)]
    Regret(#[from] crate::regret::RegretError),
    #[error(transparent)]
    Lp(#[from] crate::lp::LpError),
    #[error(transparent)]
    Uncertainty(#[from] crate::uncertainty::UncertaintyError),
    #[error("lp unexpectedly {status:?} during oracle sweep: {witness}")]
    BadSolve { status: LpStatus, witness: String },
}

#[derive(Debug, Clone)]
pub struct OracleConfig {
    /// Lattice points per free axis (box corners are always included).
    pub grid_n: usize,
    /// Hard cap on total lattice evaluations.
    pub max_points: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self { grid_n: 101, max_points: 1_000_000 }
    }
}

#[derive(Debug, Clone)]
pub struct OracleResult {
    /// Min over candidate designs of the max lattice regret.
    pub value: f64,
    /// Upper estimate of what finer sampling could still add: half a
    /// lattice step times the largest observed cost slope, summed per axis.
    pub lattice_slack: f64,
    /// The design attaining `value`.
    pub best_design: Vec<f64>,
    /// The lattice prices where that design's regret peaks.
    pub worst_prices: Vec<f64>,
    pub candidates: usize,
    pub lattice_points: usize,
    /// Indices of the price components the lattice varies.
    pub free_components: Vec<usize>,
}

fn expect_optimal(
    sol: crate::lp::LpSolution,
) -> Result<crate::lp::LpSolution, OracleError> {
    if sol.status == LpStatus::Optimal {
        Ok(sol)
    } else {
        Err(OracleError::BadSolve {
            status: sol.status,
            witness: sol.witness.unwrap_or_default(),
        })
    }
}

/// A re-solvable LP whose rows are fixed while the objective follows the
/// lattice prices.
struct SweepLp {
    lp: LinearProgram,
    hint: Option<BasisHint>,
}

impl SweepLp {
    fn new(lp: LinearProgram) -> Self {
        Self { lp, hint: None }
    }

    fn solve_at(&mut self, objective: Vec<f64>) -> Result<crate::lp::LpSolution, OracleError> {
        self.lp.set_objective(objective);
        let sol = match &self.hint {
            Some(h) => self.lp.solve_with_hint(h)?,
            None => self.lp.solve()?,
        };
        let sol = expect_optimal(sol)?;
        self.hint = Some(sol.basis.clone());
        Ok(sol)
    }
}

fn design_key(x: &[f64]) -> Vec<i64> {
    x.iter()
        .map(|v| (v / (1.0 + v.abs()) * 1e9).round() as i64)
        .collect()
}

/// The design minimizing the exact maximum regret over the box corners,
/// found by one explicit block LP (a recourse block per corner, an
/// epigraph variable on top). Cost-minimal designs at single price points
/// are often lopsided; this hedged candidate covers the mixtures they
/// miss. The value stays a brute-force upper bound either way, since every
/// candidate is still evaluated against the full lattice.
fn corner_minmax_design(
    problem: &GenericRegretProblem,
    corners: &[Vec<f64>],
    kappas: &[f64],
) -> Result<Vec<f64>, OracleError> {
    let n_x = problem.n_x();
    let n_y = problem.n_y();
    let cap = problem.master_design_cap();
    let mut lp = LinearProgram::minimize();
    for c in &problem.first_stage_cost {
        lp.add_var(*c, 0.0, cap);
    }
    let eta = lp.add_var(1.0, f64::NEG_INFINITY, f64::INFINITY);
    for (i, row) in problem.first_stage_lhs.rows().enumerate() {
        lp.add_row(crate::lp::Relation::Ge, problem.first_stage_rhs[i], row);
    }
    for (corner, kappa) in corners.iter().zip(kappas) {
        let base = lp.num_vars();
        for _ in 0..n_y {
            lp.add_var(0.0, 0.0, f64::INFINITY);
        }
        let block = &problem.design_block;
        for i in 0..block.n_rows() {
            let mut terms: Vec<(usize, f64)> = block.design.row(i).to_vec();
            terms.extend(block.control.row(i).iter().map(|&(j, v)| (base + j, v)));
            lp.add_row(crate::lp::Relation::Ge, block.rhs[i], &terms);
        }
        let at_p = problem.price_map.t_mul_vec(corner);
        let mut terms: Vec<(usize, f64)> = vec![(eta, 1.0)];
        terms.extend(
            at_p.iter()
                .enumerate()
                .filter(|(_, v)| **v != 0.0)
                .map(|(j, v)| (base + j, -*v)),
        );
        lp.add_row(crate::lp::Relation::Ge, -kappa, &terms);
    }
    let sol = expect_optimal(lp.solve()?)?;
    Ok(sol.primal[..n_x].to_vec())
}

/// Brute-force min-max regret for `(instance, alpha, cap, mode)`.
pub fn oracle_regret(
    instance: &ModelInstance,
    alpha: f64,
    cap_kg: f64,
    mode: ComparatorMode,
    config: &OracleConfig,
) -> Result<OracleResult, OracleError> {
    if config.grid_n < 2 {
        return Err(OracleError::GridTooCoarse(config.grid_n));
    }
    let sf = crate::model::build_standard_form(instance).map_err(scalarize::ScalarizeError::from)?;
    let boxed = PriceBox::new(instance.prices.clone(), alpha)?;
    let base = GenericRegretProblem::assemble(&sf, &boxed)?;
    let problem = scalarize::apply_carbon_cap(&base, instance, cap_kg, mode)?;

    // Effective lattice axes: box width and a nonzero cost-map row.
    let free: Vec<usize> = (0..problem.n_prices())
        .filter(|&r| {
            problem.bounds.upper[r] > problem.bounds.lower[r]
                && !problem.price_map.row(r).is_empty()
        })
        .collect();
    let points: usize = config.grid_n.pow(free.len() as u32);
    if points > config.max_points {
        return Err(OracleError::TooLarge { points, cap: config.max_points });
    }

    // Lattice enumeration (odometer over the free axes).
    let lattice: Vec<Vec<f64>> = (0..points)
        .map(|mut idx| {
            let mut p = problem.bounds.nominal.clone();
            for &r in free.iter().rev() {
                let tick = idx % config.grid_n;
                idx /= config.grid_n;
                p[r] = problem.bounds.lower[r]
                    + (problem.bounds.upper[r] - problem.bounds.lower[r]) * tick as f64
                        / (config.grid_n - 1) as f64;
            }
            p
        })
        .collect();

    // Pass 1: comparator optimum and candidate design at every point.
    let n_x = problem.n_x();
    let mut comparator = SweepLp::new(lps::comparator_lp(&problem, &lattice[0]));
    let mut candidate_lp = SweepLp::new(lps::design_system_lp(&problem, &lattice[0]));
    let mut kappa = Vec::with_capacity(points);
    let mut candidates: Vec<Vec<f64>> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    let mut g2_slope = vec![0.0_f64; problem.n_prices()];
    for p in &lattice {
        let at_p = problem.price_map.t_mul_vec(p);
        let mut obj = problem.first_stage_cost.clone();
        obj.extend_from_slice(&at_p);
        let comp = comparator.solve_at(obj.clone())?;
        kappa.push(comp.objective_value);
        let ay = problem.price_map.mul_vec(&comp.primal[n_x..]);
        for (r, a) in ay.iter().enumerate() {
            g2_slope[r] = g2_slope[r].max(a.abs());
        }
        let cand = candidate_lp.solve_at(obj)?;
        let x = cand.primal[..n_x].to_vec();
        if seen.insert(design_key(&x)) {
            candidates.push(x);
        }
    }

    // Hedged candidate: exact min-max over the corner subset.
    {
        let corners = problem.bounds.corners();
        let mut corner_kappas = Vec::with_capacity(corners.len());
        for corner in &corners {
            let at_p = problem.price_map.t_mul_vec(corner);
            let mut obj = problem.first_stage_cost.clone();
            obj.extend_from_slice(&at_p);
            corner_kappas.push(comparator.solve_at(obj)?.objective_value);
        }
        let hedged = corner_minmax_design(&problem, &corners, &corner_kappas)?;
        if seen.insert(design_key(&hedged)) {
            candidates.push(hedged);
        }
    }

    // Pass 2: worst lattice regret per candidate.
    let mut best: Option<(f64, Vec<f64>, Vec<f64>)> = None;
    let mut g1_slope = vec![0.0_f64; problem.n_prices()];
    for x in &candidates {
        let cx = problem.first_stage_cost_of(x);
        let mut stage = SweepLp::new(lps::design_stage_lp(&problem, x, &lattice[0]));
        let mut worst = f64::NEG_INFINITY;
        let mut worst_p = lattice[0].clone();
        for (li, p) in lattice.iter().enumerate() {
            let sol = stage.solve_at(problem.price_map.t_mul_vec(p))?;
            let ay = problem.price_map.mul_vec(&sol.primal);
            for (r, a) in ay.iter().enumerate() {
                g1_slope[r] = g1_slope[r].max(a.abs());
            }
            let regret = cx + sol.objective_value - kappa[li];
            if regret > worst {
                worst = regret;
                worst_p = p.clone();
            }
        }
        let better = best.as_ref().map_or(true, |(v, _, _)| worst < *v);
        if better {
            best = Some((worst, x.clone(), worst_p));
        }
    }
    let (value, best_design, worst_prices) = best.expect("at least one candidate");

    let lattice_slack: f64 = free
        .iter()
        .map(|&r| {
            let step = (problem.bounds.upper[r] - problem.bounds.lower[r])
                / (config.grid_n - 1) as f64;
            0.5 * step * (g1_slope[r] + g2_slope[r])
        })
        .sum();

    Ok(OracleResult {
        value,
        lattice_slack,
        best_design,
        worst_prices,
        candidates: candidates.len(),
        lattice_points: points,
        free_components: free,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regret::{run, Algorithm, RegretConfig};

    #[test]
    fn zero_alpha_is_a_single_point() {
        let instance = crate::synthetic::gas_electric_toy(2, 1, 1, 3);
        let cap = 2.0 * crate::scalarize::min_carbon(&instance).unwrap();
        let out = oracle_regret(
            &instance,
            0.0,
            cap,
            ComparatorMode::CarbonCapped,
            &OracleConfig::default(),
        )
        .unwrap();
        assert_eq!(out.lattice_points, 1);
        assert!(out.free_components.is_empty());
        // Carbon-capped comparator at the nominal point: zero regret.
        assert!(out.value.abs() <= 1e-6, "{}", out.value);
        assert_eq!(out.lattice_slack, 0.0);
    }

    #[test]
    fn grid_two_is_corner_only() {
        let instance = crate::synthetic::gas_electric_toy(2, 1, 1, 5);
        let cap = 2.0 * crate::scalarize::min_carbon(&instance).unwrap();
        let coarse = OracleConfig { grid_n: 2, max_points: 1_000_000 };
        let out = oracle_regret(&instance, 0.4, cap, ComparatorMode::CarbonCapped, &coarse).unwrap();
        assert_eq!(out.lattice_points, 4, "two free axes, corners only");
        for p in [&out.worst_prices] {
            for &r in &out.free_components {
                let at_corner = (p[r] - instance.prices.as_array()[r] * 0.6).abs() < 1e-12
                    || (p[r] - instance.prices.as_array()[r] * 1.4).abs() < 1e-12;
                assert!(at_corner);
            }
        }
    }

    #[test]
    fn too_large_guard() {
        let instance = crate::synthetic::rooftop_instance(1, 1, 1);
        let config = OracleConfig { grid_n: 101, max_points: 10_000 };
        let cap = 2.0 * crate::scalarize::min_carbon(&instance).unwrap();
        let err = oracle_regret(&instance, 0.3, cap, ComparatorMode::CarbonCapped, &config);
        assert!(matches!(err, Err(OracleError::TooLarge { .. })));
    }

    #[test]
    fn oracle_agrees_with_certificate() {
        let instance = crate::synthetic::gas_electric_toy(2, 1, 2, 8);
        let cap = 1.5 * crate::scalarize::min_carbon(&instance).unwrap();
        let mode = ComparatorMode::CarbonCapped;
        let config = OracleConfig { grid_n: 41, max_points: 1_000_000 };
        let oracle = oracle_regret(&instance, 0.3, cap, mode, &config).unwrap();

        let sf = crate::model::build_standard_form(&instance).unwrap();
        let boxed = PriceBox::new(instance.prices.clone(), 0.3).unwrap();
        let base = GenericRegretProblem::assemble(&sf, &boxed).unwrap();
        let problem = scalarize::apply_carbon_cap(&base, &instance, cap, mode).unwrap();
        let cert = run(&problem, Algorithm::Ccg, &RegretConfig::with_epsilon(1.0)).unwrap();
        assert!(cert.converged());
        let mid = 0.5 * (cert.lower_bound + cert.upper_bound);
        assert!(
            (mid - oracle.value).abs() <= 1.0 + oracle.lattice_slack,
            "certificate {mid} vs oracle {} (slack {})",
            oracle.value,
            oracle.lattice_slack
        );
    }
}
