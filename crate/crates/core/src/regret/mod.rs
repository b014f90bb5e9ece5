//! Min-max regret over the price box: worst-case subproblem, master
//! problems, and the cut-generation loop.
//!
//! The generic problem is: choose a design `x >= 0` with `G x >= h`
//! minimizing the worst-case regret over prices `p` in the polyhedron
//! `E p >= f`, where regret compares the design's optimal operating cost
//! `min { p.(A y) : B x + C y >= d, y >= 0 }` against the best achievable
//! total cost `min { c.x* + p.(A y*) }` over the comparator system.
//!
//! Two master variants drive the search: `Cg` keeps one dual cut per
//! scenario, `Ccg` additionally instantiates a fresh recourse block per
//! scenario. Both bracket the optimum between a nondecreasing lower bound
//! and a nonincreasing upper bound and stop at a configurable gap.

mod algorithm;
pub(crate) mod lps;
mod master;
mod subproblem;


pub use algorithm::run;
pub use master::{master_ccg, master_cg, MasterSolution};
pub use subproblem::{
    alternating_ascent, build_subproblem, eval_g, eval_regret, solve_worst_case,
    BilinearSubproblem, CornerCache, RegretEval, WorstCase,
};

use crate::lp::LpError;
use crate::model::{LinkBlock, PriceVector, StandardFormProblem, VariableLayout};
use crate::sparse::SparseMatrix;
use crate::uncertainty::{BoxBounds, PriceBox, PricePolyhedron};
use serde::Serialize;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RegretError {
    #[error("first stage design violates its own constraints: {0}")]
    InfeasibleFirstStage(String),
    #[error("master problem is unbounded: {0}")]
    UnboundedMain(String),
    #[error("duality gap {relative:.3e} between the two operating-cost routes")]
    DualityGapDetected { relative: f64 },
    #[error("relatively complete recourse violated: {0}")]
    RecourseViolated(String),
    #[error("price vector outside the uncertainty set")]
    PriceOutsideBox,
    #[error("lp engine: {0}")]
    Lp(#[from] LpError),
    #[error("unexpected solver outcome: {0}")]
    Solver(String),
}

/// Master-loop variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    /// Constraint generation: dual cuts only.
    Cg,
    /// Column-and-constraint generation: cuts plus recourse blocks.
    Ccg,
}

impl Algorithm {
    pub fn label(self) -> &'static str {
        match self {
            Algorithm::Cg => "cg",
            Algorithm::Ccg => "ccg",
        }
    }
}

/// Knobs of the regret run. `epsilon` is the master termination gap in EUR
/// (default 100); the subproblem is solved to `sp_gap` (default
/// `epsilon / 10`) so its slack cannot consume the master tolerance.
#[derive(Debug, Clone)]
pub struct RegretConfig {
    pub epsilon: f64,
    pub sp_gap: Option<f64>,
    pub max_iterations: usize,
    pub sp_node_budget: usize,
    /// Lower bound that keeps the epigraph variable finite before the first
    /// cut exists.
    pub eta_floor: f64,
    /// Cross-check the dual operating-cost route against the primal one on
    /// every evaluation.
    pub verify_duality: bool,
    /// Relative tolerance under which a new worst-case price is considered
    /// a repeat of a pooled one.
    pub dedup_rel_tol: f64,
}

impl Default for RegretConfig {
    fn default() -> Self {
        Self {
            epsilon: 100.0,
            sp_gap: None,
            max_iterations: 500,
            sp_node_budget: 20_000,
            eta_floor: -1e12,
            verify_duality: true,
            dedup_rel_tol: 1e-9,
        }
    }
}

impl RegretConfig {
    pub fn with_epsilon(epsilon: f64) -> Self {
        Self { epsilon, ..Self::default() }
    }

    pub fn sp_gap(&self) -> f64 {
        self.sp_gap.unwrap_or(self.epsilon / 10.0)
    }
}

/// One worst-case price scenario with everything the masters need: the
/// price vector, the comparator optimum attaining it, and the dual rates of
/// the design's second stage (required by the `Cg` cuts).
#[derive(Debug, Clone)]
pub struct Scenario {
    pub prices: Vec<f64>,
    pub comparator_design: Vec<f64>,
    pub comparator_controls: Vec<f64>,
    pub dual: Vec<f64>,
    /// `c.x* + p.(A y*)`, the comparator optimum at `prices`.
    pub comparator_cost: f64,
}

impl Scenario {
    /// Max violation across the scenario's three feasibility blocks.
    pub fn max_violation(&self, problem: &GenericRegretProblem) -> f64 {
        let mut worst: f64 = 0.0;
        // E p >= f.
        for (i, row) in problem.price_poly.lhs.rows().enumerate() {
            let lhs: f64 = row.iter().map(|&(c, v)| v * self.prices[c]).sum();
            worst = worst.max(problem.price_poly.rhs[i] - lhs);
        }
        // Comparator block.
        for r in problem
            .comparator_block
            .residual(&self.comparator_design, &self.comparator_controls)
        {
            worst = worst.max(-r);
        }
        // Dual feasibility: C^T pi <= A^T p.
        let ct_pi = problem.design_block.control.t_mul_vec(&self.dual);
        let at_p = problem.price_map.t_mul_vec(&self.prices);
        for (lhs, rhs) in ct_pi.iter().zip(&at_p) {
            worst = worst.max(lhs - rhs);
        }
        // Sign constraints.
        for v in self
            .prices
            .iter()
            .chain(&self.comparator_design)
            .chain(&self.comparator_controls)
            .chain(&self.dual)
        {
            worst = worst.max(-v);
        }
        worst
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    /// Bounds met the requested gap.
    Converged,
    /// The subproblem reproduced an already-pooled price; the bounds are
    /// valid but the gap was not reached.
    ConvergedByStall,
    /// Iteration cap hit first.
    IterationLimit,
}

#[derive(Debug, Clone, Serialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub lower: f64,
    pub upper: f64,
    pub seconds: f64,
}

/// Outcome of a regret run: the epsilon-optimal design with its bound
/// bracket, iteration history, and the pooled scenarios.
#[derive(Debug, Clone)]
pub struct RegretCertificate {
    pub design: Vec<f64>,
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub epsilon: f64,
    pub iterations: usize,
    pub status: RunStatus,
    pub algorithm: Algorithm,
    pub history: Vec<IterationRecord>,
    /// The price vector whose subproblem produced the final upper bound.
    pub worst_prices: Vec<f64>,
    pub scenarios: Vec<Scenario>,
}

impl RegretCertificate {
    pub fn converged(&self) -> bool {
        self.status == RunStatus::Converged
    }

    /// Design sizes keyed by variable name.
    pub fn design_by_name(&self, problem: &GenericRegretProblem) -> BTreeMap<String, f64> {
        problem
            .x_names
            .iter()
            .cloned()
            .zip(self.design.iter().copied())
            .collect()
    }

    /// One-line CSV summary (with header) for aggregating runs.
    pub fn summary_csv(&self) -> String {
        format!(
            "algorithm,status,regret_lb,regret_ub,epsilon,iterations\n{},{},{:.4},{:.4},{},{}\n",
            self.algorithm.label(),
            match self.status {
                RunStatus::Converged => "converged",
                RunStatus::ConvergedByStall => "stall",
                RunStatus::IterationLimit => "iteration_limit",
            },
            self.lower_bound,
            self.upper_bound,
            self.epsilon,
            self.iterations
        )
    }

    /// Serializable document: design by name, bounds, pool, history.
    pub fn to_document(&self, problem: &GenericRegretProblem) -> CertificateDocument {
        CertificateDocument {
            algorithm: self.algorithm,
            status: self.status,
            lower_bound: self.lower_bound,
            upper_bound: self.upper_bound,
            epsilon: self.epsilon,
            iterations: self.iterations,
            design: self.design_by_name(problem),
            worst_prices: name_prices(problem, &self.worst_prices),
            scenario_pool: self
                .scenarios
                .iter()
                .map(|s| ScenarioDocument {
                    prices: name_prices(problem, &s.prices),
                    comparator_cost: s.comparator_cost,
                })
                .collect(),
            history: self.history.clone(),
        }
    }
}

fn name_prices(problem: &GenericRegretProblem, p: &[f64]) -> BTreeMap<String, f64> {
    problem
        .price_names
        .iter()
        .cloned()
        .zip(p.iter().copied())
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct ScenarioDocument {
    pub prices: BTreeMap<String, f64>,
    pub comparator_cost: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CertificateDocument {
    pub algorithm: Algorithm,
    pub status: RunStatus,
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub epsilon: f64,
    pub iterations: usize,
    pub design: BTreeMap<String, f64>,
    pub worst_prices: BTreeMap<String, f64>,
    pub scenario_pool: Vec<ScenarioDocument>,
    pub history: Vec<IterationRecord>,
}

/// The complete data of one regret-minimization problem: compiled model
/// matrices, the price box, and (after the scalarization layer ran) carbon
/// cap rows.
///
/// The design and comparator systems carry separate row blocks: carbon caps
/// may apply to one side only. The comparator block always contains a copy
/// of the first-stage rows `G x* >= h` — the comparator competes under the
/// same physical constraints (roof area, size links, dummy fixation) as the
/// design it benchmarks.
#[derive(Debug, Clone)]
pub struct GenericRegretProblem {
    pub first_stage_cost: Vec<f64>,
    pub price_map: SparseMatrix,
    pub design_block: LinkBlock,
    pub comparator_block: LinkBlock,
    pub first_stage_lhs: SparseMatrix,
    pub first_stage_rhs: Vec<f64>,
    pub price_poly: PricePolyhedron,
    pub bounds: BoxBounds,
    pub layout: VariableLayout,
    pub x_names: Vec<String>,
    pub price_names: Vec<String>,
}

impl GenericRegretProblem {
    /// Joins a compiled instance with a price box. The comparator block is
    /// seeded with the linking rows plus the first-stage rows.
    pub fn assemble(
        sf: &StandardFormProblem,
        price_box: &PriceBox,
    ) -> Result<Self, RegretError> {
        let bounds = price_box.bounds(&sf.pinned_prices);
        if bounds.dim() != sf.n_prices {
            return Err(RegretError::Solver(format!(
                "price box spans {} components, problem has {}",
                bounds.dim(),
                sf.n_prices
            )));
        }
        let mut comparator = sf.link.clone();
        for (i, row) in sf.first_stage_lhs.rows().enumerate() {
            comparator.push(
                format!("fs[{}]", sf.first_stage_names[i]),
                row,
                &[],
                sf.first_stage_rhs[i],
            );
        }
        Ok(Self {
            first_stage_cost: sf.first_stage_cost.clone(),
            price_map: sf.price_map.clone(),
            design_block: sf.link.clone(),
            comparator_block: comparator,
            first_stage_lhs: sf.first_stage_lhs.clone(),
            first_stage_rhs: sf.first_stage_rhs.clone(),
            price_poly: price_box.to_polyhedron(&sf.pinned_prices),
            bounds,
            layout: sf.layout.clone(),
            x_names: sf.layout.x_names.clone(),
            price_names: sf.price_names.clone(),
        })
    }

    pub fn n_x(&self) -> usize {
        self.first_stage_cost.len()
    }

    pub fn n_y(&self) -> usize {
        self.design_block.control.ncols()
    }

    pub fn n_prices(&self) -> usize {
        self.bounds.dim()
    }

    pub fn first_stage_cost_of(&self, x: &[f64]) -> f64 {
        self.first_stage_cost.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Generous ceiling on design variables inside the master problems.
    ///
    /// Early masters with few cuts can be unbounded along oversizing rays
    /// (one dual cut may reward capacity more than it costs), and the
    /// epigraph floor alone then produces vertices with astronomically
    /// large designs that wreck the subproblem numerics. Any actually
    /// optimal design is dominated far below this ceiling (oversizing only
    /// adds investment cost), so capping the master keeps its value a valid
    /// lower bound.
    pub fn master_design_cap(&self) -> f64 {
        let data_scale = self
            .first_stage_rhs
            .iter()
            .chain(self.design_block.rhs.iter())
            .fold(1.0_f64, |a, h| a.max(h.abs()));
        1e3 * data_scale
    }

    /// Extends a market price vector with the pinned components.
    pub fn full_prices(&self, p: &PriceVector) -> Vec<f64> {
        let mut full = p.as_array().to_vec();
        full.resize(self.n_prices(), 0.0);
        for r in PriceVector::DIM..self.n_prices() {
            full[r] = self.bounds.nominal[r];
        }
        full
    }

    /// Checks `x >= 0` and `G x >= h` within tolerance.
    pub fn first_stage_feasible(&self, x: &[f64]) -> Result<(), String> {
        if x.len() != self.n_x() {
            return Err(format!("design has {} entries, expected {}", x.len(), self.n_x()));
        }
        for (j, v) in x.iter().enumerate() {
            if *v < -1e-7 {
                return Err(format!("{} is negative ({v})", self.x_names[j]));
            }
        }
        let gx = self.first_stage_lhs.mul_vec(x);
        for (i, (lhs, rhs)) in gx.iter().zip(&self.first_stage_rhs).enumerate() {
            if lhs - rhs < -1e-6 * (1.0 + rhs.abs()) {
                return Err(format!("first-stage row {i} violated by {}", rhs - lhs));
            }
        }
        Ok(())
    }

    /// Feasibility probe for relatively complete recourse: the cheapest
    /// first-stage-feasible design must admit a second stage. The
    /// second-stage feasible set does not depend on prices, so one probe
    /// certifies every corner of the box at once.
    pub fn verify_recourse(&self) -> Result<(), RegretError> {
        let design = lps::cheapest_design(self)?;
        lps::second_stage_feasible(self, &design)
    }

    /// Whether the given design admits a feasible second stage (the check
    /// is price-independent, so it holds for every point of the box).
    pub fn second_stage_feasible(&self, x: &[f64]) -> bool {
        lps::second_stage_feasible(self, x).is_ok()
    }
}

/// Comparator optimum at fixed full prices: `(cost, design, controls)`.
pub fn comparator_minimum(
    problem: &GenericRegretProblem,
    p_full: &[f64],
) -> Result<(f64, Vec<f64>, Vec<f64>), RegretError> {
    let sol = lps::expect_optimal(
        lps::comparator_lp(problem, p_full).solve()?,
        "comparator minimum",
    )?;
    let n_x = problem.n_x();
    Ok((
        sol.objective_value,
        sol.primal[..n_x].to_vec(),
        sol.primal[n_x..].to_vec(),
    ))
}

/// Both routes to the design's operating cost at fixed prices: the dual
/// maximization `max (d - Bx).pi` and the primal minimization
/// `min p.(A y)`. Strong duality makes them equal; their disagreement
/// measures kernel health.
pub fn operating_cost_routes(
    problem: &GenericRegretProblem,
    x: &[f64],
    p_full: &[f64],
) -> Result<(f64, f64), RegretError> {
    let dual = lps::expect_optimal(
        lps::dual_stage_lp(problem, x, p_full).solve()?,
        "dual operating stage",
    )?;
    let primal = lps::expect_optimal(
        lps::design_stage_lp(problem, x, p_full).solve()?,
        "primal operating stage",
    )?;
    Ok((dual.objective_value, primal.objective_value))
}

/// Design-system optimum at fixed full prices: minimizes `c.x + p.(A y)`
/// over the design linking rows plus the first-stage rows.
pub fn design_minimum(
    problem: &GenericRegretProblem,
    p_full: &[f64],
) -> Result<(f64, Vec<f64>, Vec<f64>), RegretError> {
    let sol = lps::expect_optimal(
        lps::design_system_lp(problem, p_full).solve()?,
        "design-system minimum",
    )?;
    let n_x = problem.n_x();
    Ok((
        sol.objective_value,
        sol.primal[..n_x].to_vec(),
        sol.primal[n_x..].to_vec(),
    ))
}
