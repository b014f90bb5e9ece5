//! Worst-case price search: exact evaluation at a fixed price, the
//! alternating-ascent heuristic, and the spatial branch-and-bound that
//! solves the bilinear subproblem to a requested gap.

use super::lps;
use super::{GenericRegretProblem, RegretConfig, RegretError, Scenario};
use crate::lp::BasisHint;
use crate::uncertainty::BoxBounds;
use std::collections::HashMap;

/// The subproblem for a fixed design: maximize
/// `(d - Bx).pi - c.x* - p.(A y*)` over `(p, pi, x*, y*)` with
/// `C^T pi <= A^T p`, the comparator block, and `E p >= f`. Only the
/// objective depends on the design; the feasible set never does.
#[derive(Debug, Clone)]
pub struct BilinearSubproblem {
    /// Coefficients of `pi` in the objective: `d - Bx`.
    pub dual_objective: Vec<f64>,
    pub design: Vec<f64>,
}

/// Builds the subproblem data, rejecting designs that violate their own
/// first-stage constraints.
pub fn build_subproblem(
    problem: &GenericRegretProblem,
    x: &[f64],
) -> Result<BilinearSubproblem, RegretError> {
    problem
        .first_stage_feasible(x)
        .map_err(RegretError::InfeasibleFirstStage)?;
    let bx = problem.design_block.design.mul_vec(x);
    Ok(BilinearSubproblem {
        dual_objective: problem
            .design_block
            .rhs
            .iter()
            .zip(&bx)
            .map(|(d, b)| d - b)
            .collect(),
        design: x.to_vec(),
    })
}

impl BilinearSubproblem {
    /// The bilinear objective at a feasible point.
    pub fn objective_value(
        &self,
        problem: &GenericRegretProblem,
        prices: &[f64],
        dual: &[f64],
        comparator_design: &[f64],
        comparator_controls: &[f64],
    ) -> f64 {
        let d_pi: f64 = self.dual_objective.iter().zip(dual).map(|(d, pi)| d * pi).sum();
        let cx: f64 = problem.first_stage_cost_of(comparator_design);
        let ay = problem.price_map.mul_vec(comparator_controls);
        let p_ay: f64 = prices.iter().zip(&ay).map(|(p, a)| p * a).sum();
        d_pi - cx - p_ay
    }
}

/// Exact evaluation of both regret parts at a fixed price vector.
#[derive(Debug, Clone)]
pub struct RegretEval {
    /// `g1`: the design's optimal operating cost at these prices.
    pub operating_cost: f64,
    /// `kappa(p)`: the comparator's optimal total cost (`g2 = -kappa`).
    pub comparator_cost: f64,
    pub dual: Vec<f64>,
    pub design_controls: Vec<f64>,
    pub comparator_design: Vec<f64>,
    pub comparator_controls: Vec<f64>,
}

impl RegretEval {
    /// `regret(x, p) = c.x + g1 + g2`.
    pub fn regret(&self, problem: &GenericRegretProblem, x: &[f64]) -> f64 {
        problem.first_stage_cost_of(x) + self.sp_term()
    }

    /// The subproblem objective contribution `g1 + g2`.
    pub fn sp_term(&self) -> f64 {
        self.operating_cost - self.comparator_cost
    }

    pub fn scenario(&self, prices: Vec<f64>) -> Scenario {
        Scenario {
            prices,
            comparator_design: self.comparator_design.clone(),
            comparator_controls: self.comparator_controls.clone(),
            dual: self.dual.clone(),
            comparator_cost: self.comparator_cost,
        }
    }
}

/// Comparator results are design-independent; callers share this cache
/// across subproblem calls and master iterations. Keyed by exact price
/// bits, values are `(cost, design, controls)`.
pub type CornerCache = HashMap<Vec<u64>, (f64, Vec<f64>, Vec<f64>)>;

fn price_key(p: &[f64]) -> Vec<u64> {
    p.iter().map(|v| v.to_bits()).collect()
}

fn comparator_at(
    problem: &GenericRegretProblem,
    p: &[f64],
    cache: &mut CornerCache,
) -> Result<(f64, Vec<f64>, Vec<f64>), RegretError> {
    if let Some(hit) = cache.get(&price_key(p)) {
        return Ok(hit.clone());
    }
    let sol = lps::expect_optimal(lps::comparator_lp(problem, p).solve()?, "comparator stage")?;
    let n_x = problem.n_x();
    let entry = (
        sol.objective_value,
        sol.primal[..n_x].to_vec(),
        sol.primal[n_x..].to_vec(),
    );
    cache.insert(price_key(p), entry.clone());
    Ok(entry)
}

/// Evaluates both regret parts at `p`, solving the operating cost through
/// the dual route and (when `verify_duality` is on) cross-checking it
/// against the primal route. A relative disagreement above `1e-6` reports
/// [`RegretError::DualityGapDetected`], which indicates a kernel defect.
pub fn eval_regret(
    problem: &GenericRegretProblem,
    x: &[f64],
    p: &[f64],
    config: &RegretConfig,
    cache: &mut CornerCache,
) -> Result<RegretEval, RegretError> {
    if !problem.bounds.contains(p) {
        return Err(RegretError::PriceOutsideBox);
    }
    let mut dual_sol = lps::expect_optimal(
        lps::dual_stage_lp(problem, x, p).solve()?,
        "dual operating stage",
    )?;
    let mut design_controls = Vec::new();
    if config.verify_duality {
        let mut primal_sol = lps::expect_optimal(
            lps::design_stage_lp(problem, x, p).solve()?,
            "primal operating stage",
        )?;
        let rel_gap = |a: &crate::lp::LpSolution, b: &crate::lp::LpSolution| {
            (a.objective_value - b.objective_value).abs() / (1.0 + a.objective_value.abs())
        };
        if rel_gap(&dual_sol, &primal_sol) > 1e-6 {
            // Borderline disagreements can come from ordinary pivot
            // tolerances at large problem scales; retry both routes once
            // with tightened tolerances before calling it a defect.
            let tight = crate::lp::SolverConfig {
                feas_tol: 1e-9,
                opt_tol: 1e-11,
                ..crate::lp::SolverConfig::default()
            };
            dual_sol = lps::expect_optimal(
                lps::dual_stage_lp(problem, x, p).solve_with_config(None, &tight)?,
                "dual operating stage (tight)",
            )?;
            primal_sol = lps::expect_optimal(
                lps::design_stage_lp(problem, x, p).solve_with_config(None, &tight)?,
                "primal operating stage (tight)",
            )?;
            let gap = rel_gap(&dual_sol, &primal_sol);
            if gap > 1e-6 {
                return Err(RegretError::DualityGapDetected { relative: gap });
            }
        }
        design_controls = primal_sol.primal;
    }
    let (comparator_cost, comparator_design, comparator_controls) =
        comparator_at(problem, p, cache)?;
    Ok(RegretEval {
        operating_cost: dual_sol.objective_value,
        comparator_cost,
        dual: dual_sol.primal,
        design_controls,
        comparator_design,
        comparator_controls,
    })
}

/// `(g1, g2)` at a fixed price: the design's operating cost and the negated
/// comparator optimum. `regret = c.x + g1 + g2`.
pub fn eval_g(
    problem: &GenericRegretProblem,
    x: &[f64],
    p: &[f64],
    config: &RegretConfig,
) -> Result<(f64, f64), RegretError> {
    let mut cache = CornerCache::new();
    let eval = eval_regret(problem, x, p, config, &mut cache)?;
    Ok((eval.operating_cost, -eval.comparator_cost))
}

/// Alternating ascent between the price/dual block and the comparator
/// block. Each step is an exact LP maximization over its block, so the
/// value sequence is nondecreasing; the result is a feasible scenario whose
/// value lower-bounds the subproblem optimum.
pub fn alternating_ascent(
    problem: &GenericRegretProblem,
    x: &[f64],
    p_start: &[f64],
    config: &RegretConfig,
    cache: &mut CornerCache,
) -> Result<(Scenario, f64), RegretError> {
    ascent_within(problem, &problem.bounds, x, p_start, config, cache)
}

fn ascent_within(
    problem: &GenericRegretProblem,
    bounds: &BoxBounds,
    x: &[f64],
    p_start: &[f64],
    config: &RegretConfig,
    cache: &mut CornerCache,
) -> Result<(Scenario, f64), RegretError> {
    if !problem.bounds.contains(p_start) {
        return Err(RegretError::PriceOutsideBox);
    }
    build_subproblem(problem, x)?;
    let mut prices = p_start.to_vec();
    let mut eval = eval_regret(problem, x, &prices, config, cache)?;
    let mut value = eval.sp_term();
    for _ in 0..50 {
        // (i) fix (x*, y*), maximize over (p, pi) jointly.
        let price_lp = lps::ascent_price_lp(problem, bounds, x, &eval.comparator_controls);
        let price_sol = lps::expect_optimal(price_lp.solve()?, "ascent price step")?;
        let n_pi = problem.design_block.n_rows();
        let new_prices = price_sol.primal[n_pi..].to_vec();
        // (ii) fix p, maximize over (pi, x*, y*).
        let new_eval = eval_regret(problem, x, &new_prices, config, cache)?;
        let new_value = new_eval.sp_term();
        if new_value > value + 1e-6 {
            prices = new_prices;
            eval = new_eval;
            value = new_value;
        } else {
            break;
        }
    }
    Ok((eval.scenario(prices), value))
}

/// Result of the worst-case search for one design.
#[derive(Debug, Clone)]
pub struct WorstCase {
    /// Valid upper bound on the subproblem optimum.
    pub upper: f64,
    pub incumbent: Scenario,
    pub incumbent_value: f64,
    /// False when the node budget ran out before `upper - incumbent <= gap`.
    pub gap_reached: bool,
    pub nodes: usize,
}

struct Node {
    bounds: BoxBounds,
    upper: f64,
    seq: usize,
    hint: BasisHint,
    /// Envelope argmax of this node's bound; branching aims here.
    focus: Vec<f64>,
}

struct Search<'a> {
    problem: &'a GenericRegretProblem,
    x: &'a [f64],
    config: &'a RegretConfig,
    search_bounds: BoxBounds,
    g1_memo: HashMap<Vec<u64>, f64>,
    best_value: f64,
    best_scenario: Option<Scenario>,
    ascended_at: f64,
    nodes: usize,
}

impl<'a> Search<'a> {
    /// Exactly evaluates every corner of `bounds` not seen before, updating
    /// the incumbent; returns the corners with their `g2` values.
    fn sweep_corners(
        &mut self,
        bounds: &BoxBounds,
        cache: &mut CornerCache,
    ) -> Result<(Vec<Vec<f64>>, Vec<f64>), RegretError> {
        let corners = bounds.corners();
        let mut g2s = Vec::with_capacity(corners.len());
        for corner in &corners {
            let key = price_key(corner);
            g2s.push(-comparator_at(self.problem, corner, cache)?.0);
            if !self.g1_memo.contains_key(&key) {
                let eval = eval_regret(self.problem, self.x, corner, self.config, cache)?;
                self.g1_memo.insert(key, eval.operating_cost);
                let value = eval.sp_term();
                if self.best_scenario.is_none() || value > self.best_value {
                    self.best_value = value;
                    self.best_scenario = Some(eval.scenario(corner.clone()));
                }
            }
        }
        Ok((corners, g2s))
    }

    /// Node upper bound: the decomposed bound (exact `g1` maximum over the
    /// sub-box plus the corner-attained `g2` maximum) intersected with the
    /// concave-envelope bound over the same corners, which is never looser.
    /// Also returns the envelope's price argmax — the point where the hull
    /// overestimate concentrates — to steer branching.
    fn node_bound(
        &mut self,
        bounds: &BoxBounds,
        corners: &[Vec<f64>],
        g2s: &[f64],
        hint: Option<&BasisHint>,
    ) -> Result<(f64, BasisHint, Vec<f64>), RegretError> {
        let joint = lps::joint_price_dual_lp(self.problem, self.x, bounds);
        let joint_sol = lps::expect_optimal(
            lps::solve_maybe_warm(&joint, hint)?,
            "joint price-dual bound",
        )?;
        let g2_max = g2s.iter().fold(f64::NEG_INFINITY, |a, b| a.max(*b));
        let decomposed = joint_sol.objective_value + g2_max;
        let (env, scales) = lps::envelope_bound_lp(self.problem, self.x, corners, g2s);
        let env_sol = lps::expect_optimal(env.solve()?, "envelope bound")?;
        let n_pi = self.problem.design_block.n_rows();
        let mut p_hat = vec![0.0; bounds.dim()];
        for (ci, corner) in corners.iter().enumerate() {
            let weight = env_sol.primal[n_pi + ci] / scales[ci];
            if weight != 0.0 {
                for (r, v) in corner.iter().enumerate() {
                    p_hat[r] += weight * v;
                }
            }
        }
        self.nodes += 1;
        Ok((
            decomposed.min(env_sol.objective_value),
            joint_sol.basis,
            p_hat,
        ))
    }

    /// Polishes the incumbent by alternating ascent when it moved since the
    /// last polish.
    fn maybe_ascend(&mut self, gap: f64, cache: &mut CornerCache) -> Result<(), RegretError> {
        if self.best_value <= self.ascended_at + gap / 10.0 {
            return Ok(());
        }
        let start = self
            .best_scenario
            .as_ref()
            .expect("incumbent exists")
            .prices
            .clone();
        let (scenario, value) = ascent_within(
            self.problem,
            &self.search_bounds,
            self.x,
            &start,
            self.config,
            cache,
        )?;
        self.ascended_at = self.best_value.max(value);
        if value > self.best_value {
            self.best_value = value;
            self.best_scenario = Some(scenario);
        }
        Ok(())
    }

    fn finish(self, upper: f64, gap_reached: bool) -> WorstCase {
        WorstCase {
            upper,
            incumbent_value: self.best_value,
            incumbent: self.best_scenario.expect("incumbent exists"),
            gap_reached,
            nodes: self.nodes,
        }
    }
}

/// Branch-and-bound over the price box; see [`Search::node_bound`] for the
/// bounding scheme. Returns a valid upper bound, the best scenario found,
/// and whether `upper - incumbent <= gap` was certified within the node
/// budget.
pub fn solve_worst_case(
    problem: &GenericRegretProblem,
    x: &[f64],
    gap: f64,
    config: &RegretConfig,
    cache: &mut CornerCache,
) -> Result<WorstCase, RegretError> {
    assert!(gap > 0.0, "subproblem gap must be positive");
    build_subproblem(problem, x)?;

    // Components with an all-zero row of A never enter either regret part;
    // pinning them to nominal keeps the corner sweeps and branching over
    // the components the objective actually depends on. The bound remains
    // valid for the full box because the objective is constant along the
    // pinned directions.
    let mut root_bounds = problem.bounds.clone();
    for r in 0..root_bounds.dim() {
        if problem.price_map.row(r).is_empty() {
            root_bounds.lower[r] = root_bounds.nominal[r];
            root_bounds.upper[r] = root_bounds.nominal[r];
        }
    }

    let mut search = Search {
        problem,
        x,
        config,
        search_bounds: root_bounds.clone(),
        g1_memo: HashMap::new(),
        best_value: f64::NEG_INFINITY,
        best_scenario: None,
        ascended_at: f64::NEG_INFINITY,
        nodes: 0,
    };

    let (root_corners, root_g2s) = search.sweep_corners(&root_bounds, cache)?;
    let (root_upper, root_hint, root_focus) =
        search.node_bound(&root_bounds, &root_corners, &root_g2s, None)?;
    search.maybe_ascend(gap, cache)?;

    let mut queue: Vec<Node> = vec![Node {
        bounds: root_bounds,
        upper: root_upper,
        seq: 0,
        hint: root_hint,
        focus: root_focus,
    }];
    let mut seq = 1usize;

    loop {
        // Highest bound first, oldest first among exact ties.
        let top_idx = queue
            .iter()
            .enumerate()
            .max_by(|(_, a), (_, b)| a.upper.total_cmp(&b.upper).then(b.seq.cmp(&a.seq)))
            .map(|(i, _)| i);
        let Some(top_idx) = top_idx else {
            let upper = search.best_value;
            return Ok(search.finish(upper, true));
        };
        let global_upper = queue[top_idx].upper.max(search.best_value);
        if global_upper - search.best_value <= gap {
            return Ok(search.finish(global_upper, true));
        }
        if search.nodes >= config.sp_node_budget {
            return Ok(search.finish(global_upper, false));
        }
        let node = queue.swap_remove(top_idx);

        // Evaluating the bound's own argmax both supplies an incumbent and
        // seeds the hull refinement exactly where the bound overestimates.
        if node.bounds.contains(&node.focus)
            && !search.g1_memo.contains_key(&price_key(&node.focus))
        {
            let eval = eval_regret(problem, x, &node.focus, config, cache)?;
            search
                .g1_memo
                .insert(price_key(&node.focus), eval.operating_cost);
            let value = eval.sp_term();
            if value > search.best_value {
                search.best_value = value;
                search.best_scenario = Some(eval.scenario(node.focus.clone()));
                search.maybe_ascend(gap, cache)?;
            }
        }

        // Branch toward the envelope argmax: pick the axis where it sits
        // most interior (weighted by relative width) and split there,
        // safeguarded away from the edges. When the argmax hugs a corner,
        // halve the longest relative edge instead. Ties break toward the
        // lowest index.
        let widths = node.bounds.relative_widths();
        let interiority = |r: usize| -> f64 {
            let w = node.bounds.upper[r] - node.bounds.lower[r];
            if w <= 0.0 {
                return 0.0;
            }
            let d = (node.focus[r] - node.bounds.lower[r])
                .min(node.bounds.upper[r] - node.focus[r]);
            (d / w).max(0.0)
        };
        let focus_branch = (0..widths.len())
            .max_by(|&a, &b| {
                (interiority(a) * widths[a])
                    .total_cmp(&(interiority(b) * widths[b]))
                    .then(b.cmp(&a))
            })
            .expect("nonempty bounds");
        let (branch, split_at) = if interiority(focus_branch) > 0.05 && widths[focus_branch] > 0.0 {
            let lo = node.bounds.lower[focus_branch];
            let hi = node.bounds.upper[focus_branch];
            let w = hi - lo;
            (
                focus_branch,
                node.focus[focus_branch].clamp(lo + 0.2 * w, hi - 0.2 * w),
            )
        } else {
            let widest = widths
                .iter()
                .enumerate()
                .max_by(|(ia, a), (ib, b)| a.total_cmp(b).then(ib.cmp(ia)))
                .map(|(i, _)| i)
                .expect("nonempty bounds");
            if widths[widest] <= 0.0 {
                // A point node: its corner evaluation was exact already.
                continue;
            }
            let mid = 0.5 * (node.bounds.lower[widest] + node.bounds.upper[widest]);
            (widest, mid)
        };
        let mut low = node.bounds.clone();
        low.upper[branch] = split_at;
        let mut high = node.bounds.clone();
        high.lower[branch] = split_at;
        for child_bounds in [low, high] {
            let (corners, g2s) = search.sweep_corners(&child_bounds, cache)?;
            let (upper, hint, focus) =
                search.node_bound(&child_bounds, &corners, &g2s, Some(&node.hint))?;
            search.maybe_ascend(gap, cache)?;
            if upper > search.best_value {
                queue.push(Node { bounds: child_bounds, upper, seq, hint, focus });
            }
            seq += 1;
        }
    }
}
