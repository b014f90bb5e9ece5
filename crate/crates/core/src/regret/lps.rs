//! LP assembly for the regret machinery. Every function returns a plain
//! [`LinearProgram`] for the kernel; nothing here pivots.

use super::{GenericRegretProblem, RegretError, Scenario};
use crate::lp::{BasisHint, LinearProgram, LpSolution, LpStatus, Relation};
use crate::uncertainty::BoxBounds;

pub(super) fn expect_optimal(
    sol: LpSolution,
    what: &str,
) -> Result<LpSolution, RegretError> {
    match sol.status {
        LpStatus::Optimal => Ok(sol),
        other => Err(RegretError::Solver(format!(
            "{what}: {other:?} ({})",
            sol.witness.unwrap_or_default()
        ))),
    }
}

/// `min { p.(A y) : C y >= d - B x, y >= 0 }` — the design's second stage
/// at fixed prices.
pub fn design_stage_lp(problem: &GenericRegretProblem, x: &[f64], p_full: &[f64]) -> LinearProgram {
    let mut lp = LinearProgram::minimize();
    let obj = problem.price_map.t_mul_vec(p_full);
    for c in &obj {
        lp.add_var(*c, 0.0, f64::INFINITY);
    }
    let bx = problem.design_block.design.mul_vec(x);
    for (i, row) in problem.design_block.control.rows().enumerate() {
        lp.add_row(Relation::Ge, problem.design_block.rhs[i] - bx[i], row);
    }
    lp
}

/// `max { (d - Bx).pi : C^T pi <= A^T p, pi >= 0 }` — the dual route to the
/// same operating cost.
pub fn dual_stage_lp(problem: &GenericRegretProblem, x: &[f64], p_full: &[f64]) -> LinearProgram {
    let mut lp = LinearProgram::maximize();
    let bx = problem.design_block.design.mul_vec(x);
    for i in 0..problem.design_block.n_rows() {
        lp.add_var(problem.design_block.rhs[i] - bx[i], 0.0, f64::INFINITY);
    }
    let ct = problem.design_block.control.transposed();
    let at_p = problem.price_map.t_mul_vec(p_full);
    for (j, row) in ct.rows().enumerate() {
        lp.add_row(Relation::Le, at_p[j], row);
    }
    lp
}

/// `min { c.x* + p.(A y*) : B* x* + C* y* >= d* }` — the comparator's best
/// total cost at fixed prices. Variables are `x*` first, then `y*`.
pub fn comparator_lp(problem: &GenericRegretProblem, p_full: &[f64]) -> LinearProgram {
    let mut lp = LinearProgram::minimize();
    for c in &problem.first_stage_cost {
        lp.add_var(*c, 0.0, f64::INFINITY);
    }
    let at_p = problem.price_map.t_mul_vec(p_full);
    for c in &at_p {
        lp.add_var(*c, 0.0, f64::INFINITY);
    }
    let n_x = problem.n_x();
    let block = &problem.comparator_block;
    for i in 0..block.n_rows() {
        let mut terms: Vec<(usize, f64)> = block.design.row(i).to_vec();
        terms.extend(block.control.row(i).iter().map(|&(j, v)| (n_x + j, v)));
        lp.add_row(Relation::Ge, block.rhs[i], &terms);
    }
    lp
}

/// `min { c.x + p.(A y) : B x + C y >= d, G x >= h }` — the design
/// system's best total cost at fixed prices. Variables are `x` then `y`.
pub fn design_system_lp(problem: &GenericRegretProblem, p_full: &[f64]) -> LinearProgram {
    let mut lp = LinearProgram::minimize();
    for c in &problem.first_stage_cost {
        lp.add_var(*c, 0.0, f64::INFINITY);
    }
    let at_p = problem.price_map.t_mul_vec(p_full);
    for c in &at_p {
        lp.add_var(*c, 0.0, f64::INFINITY);
    }
    let n_x = problem.n_x();
    let block = &problem.design_block;
    for i in 0..block.n_rows() {
        let mut terms: Vec<(usize, f64)> = block.design.row(i).to_vec();
        terms.extend(block.control.row(i).iter().map(|&(j, v)| (n_x + j, v)));
        lp.add_row(Relation::Ge, block.rhs[i], &terms);
    }
    for (i, row) in problem.first_stage_lhs.rows().enumerate() {
        lp.add_row(Relation::Ge, problem.first_stage_rhs[i], row);
    }
    lp
}

/// Joint maximization of the dual operating cost over a price sub-box:
/// `max { (d - Bx).pi : C^T pi - A^T p <= 0, E p >= f, p in node }`.
/// Variables are `pi` first, then `p`. Exact because the objective is
/// linear in `pi` and prices enter constraints only.
pub fn joint_price_dual_lp(
    problem: &GenericRegretProblem,
    x: &[f64],
    node: &BoxBounds,
) -> LinearProgram {
    let mut lp = LinearProgram::maximize();
    let bx = problem.design_block.design.mul_vec(x);
    let n_pi = problem.design_block.n_rows();
    for i in 0..n_pi {
        lp.add_var(problem.design_block.rhs[i] - bx[i], 0.0, f64::INFINITY);
    }
    for r in 0..node.dim() {
        lp.add_var(0.0, node.lower[r], node.upper[r]);
    }
    let ct = problem.design_block.control.transposed();
    let at = problem.price_map.transposed();
    for j in 0..problem.n_y() {
        let mut terms: Vec<(usize, f64)> = ct.row(j).to_vec();
        terms.extend(at.row(j).iter().map(|&(r, v)| (n_pi + r, -v)));
        lp.add_row(Relation::Le, 0.0, &terms);
    }
    for (i, row) in problem.price_poly.lhs.rows().enumerate() {
        let terms: Vec<(usize, f64)> = row.iter().map(|&(r, v)| (n_pi + r, v)).collect();
        lp.add_row(Relation::Ge, problem.price_poly.rhs[i], &terms);
    }
    lp
}

/// Node upper bound tightening: maximize the dual operating cost plus the
/// upper concave envelope of the comparator part over the node's corners.
/// `corner_values[c]` must be `g2` at `corners[c]` (`-comparator cost`).
/// Variables are `pi` first, then one hull weight per corner.
/// Returns the LP plus the per-corner scale factors: the solved weight of
/// corner `c` is `primal[n_pi + c] / scales[c]`.
pub fn envelope_bound_lp(
    problem: &GenericRegretProblem,
    x: &[f64],
    corners: &[Vec<f64>],
    corner_values: &[f64],
) -> (LinearProgram, Vec<f64>) {
    let mut lp = LinearProgram::maximize();
    let bx = problem.design_block.design.mul_vec(x);
    let n_pi = problem.design_block.n_rows();
    for i in 0..n_pi {
        lp.add_var(problem.design_block.rhs[i] - bx[i], 0.0, f64::INFINITY);
    }
    // C^T pi <= A^T (sum_c lambda_c corner_c), substituting p out. The hull
    // weights are column-scaled to their corner's coefficient magnitude so
    // the basis does not mix wildly different scales.
    let ct = problem.design_block.control.transposed();
    let at_corner: Vec<Vec<f64>> = corners
        .iter()
        .map(|c| problem.price_map.t_mul_vec(c))
        .collect();
    let scales: Vec<f64> = at_corner
        .iter()
        .map(|a| a.iter().fold(1.0_f64, |m, v| m.max(v.abs())))
        .collect();
    for (ci, &v) in corner_values.iter().enumerate() {
        lp.add_var(v / scales[ci], 0.0, f64::INFINITY);
    }
    for j in 0..problem.n_y() {
        let mut terms: Vec<(usize, f64)> = ct.row(j).to_vec();
        for (ci, at_c) in at_corner.iter().enumerate() {
            if at_c[j] != 0.0 {
                terms.push((n_pi + ci, -at_c[j] / scales[ci]));
            }
        }
        lp.add_row(Relation::Le, 0.0, &terms);
    }
    let hull: Vec<(usize, f64)> = (0..corners.len())
        .map(|ci| (n_pi + ci, 1.0 / scales[ci]))
        .collect();
    lp.add_row(Relation::Eq, 1.0, &hull);
    (lp, scales)
}

/// Ascent step (i): fix the comparator `(x*, y*)`, maximize over `(p, pi)`
/// jointly. Variables are `pi` first, then `p`; the constant `-c.x*` is
/// added by the caller.
pub fn ascent_price_lp(
    problem: &GenericRegretProblem,
    bounds: &BoxBounds,
    x: &[f64],
    comparator_controls: &[f64],
) -> LinearProgram {
    let mut lp = joint_price_dual_lp(problem, x, bounds);
    let n_pi = problem.design_block.n_rows();
    // Objective gains -(A y*).p on the price variables.
    let ay = problem.price_map.mul_vec(comparator_controls);
    let mut obj = lp.objective().to_vec();
    for (r, a) in ay.iter().enumerate() {
        obj[n_pi + r] -= a;
    }
    lp.set_objective(obj);
    lp
}

/// The `Cg` master: design plus epigraph variable, one dual cut per pooled
/// scenario. Variables: `x` then `eta`.
pub fn master_cg_lp(
    problem: &GenericRegretProblem,
    pool: &[Scenario],
    eta_floor: f64,
) -> LinearProgram {
    let cap = problem.master_design_cap();
    let mut lp = LinearProgram::minimize();
    for (j, c) in problem.first_stage_cost.iter().enumerate() {
        lp.add_named_var(&problem.x_names[j], *c, 0.0, cap);
    }
    let eta = lp.add_named_var("eta", 1.0, eta_floor, f64::INFINITY);
    push_first_stage_rows(problem, &mut lp);
    for (l, s) in pool.iter().enumerate() {
        // eta + (B^T pi).x >= d.pi - kappa.
        let bt_pi = problem.design_block.design.t_mul_vec(&s.dual);
        let d_pi: f64 = problem
            .design_block
            .rhs
            .iter()
            .zip(&s.dual)
            .map(|(d, pi)| d * pi)
            .sum();
        let mut terms: Vec<(usize, f64)> = vec![(eta, 1.0)];
        terms.extend(bt_pi.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(j, v)| (j, *v)));
        lp.add_named_row(&format!("cut{l}"), Relation::Ge, d_pi - s.comparator_cost, &terms);
    }
    lp
}

/// The `Ccg` master: like `Cg` but each scenario gets a fresh recourse
/// block `y_l` with `B x + C y_l >= d` and the primal cut
/// `eta >= (A^T p_l).y_l - kappa_l`. Variables: `x`, `eta`, then the `y_l`
/// blocks in pool order.
pub fn master_ccg_lp(
    problem: &GenericRegretProblem,
    pool: &[Scenario],
    eta_floor: f64,
) -> LinearProgram {
    let cap = problem.master_design_cap();
    let mut lp = LinearProgram::minimize();
    for (j, c) in problem.first_stage_cost.iter().enumerate() {
        lp.add_named_var(&problem.x_names[j], *c, 0.0, cap);
    }
    let eta = lp.add_named_var("eta", 1.0, eta_floor, f64::INFINITY);
    push_first_stage_rows(problem, &mut lp);
    let n_y = problem.n_y();
    for (l, s) in pool.iter().enumerate() {
        let base = lp.num_vars();
        for _ in 0..n_y {
            lp.add_var(0.0, 0.0, f64::INFINITY);
        }
        let block = &problem.design_block;
        for i in 0..block.n_rows() {
            let mut terms: Vec<(usize, f64)> = block.design.row(i).to_vec();
            terms.extend(block.control.row(i).iter().map(|&(j, v)| (base + j, v)));
            lp.add_row(Relation::Ge, block.rhs[i], &terms);
        }
        let at_p = problem.price_map.t_mul_vec(&s.prices);
        let mut terms: Vec<(usize, f64)> = vec![(eta, 1.0)];
        terms.extend(
            at_p.iter()
                .enumerate()
                .filter(|(_, v)| **v != 0.0)
                .map(|(j, v)| (base + j, -*v)),
        );
        lp.add_named_row(&format!("cut{l}"), Relation::Ge, -s.comparator_cost, &terms);
    }
    lp
}

fn push_first_stage_rows(problem: &GenericRegretProblem, lp: &mut LinearProgram) {
    for (i, row) in problem.first_stage_lhs.rows().enumerate() {
        lp.add_row(Relation::Ge, problem.first_stage_rhs[i], row);
    }
}

/// `argmin { c.x : G x >= h, x >= 0 }` — the cheapest first-stage-feasible
/// design, used as the recourse probe anchor.
pub(super) fn cheapest_design(problem: &GenericRegretProblem) -> Result<Vec<f64>, RegretError> {
    let mut lp = LinearProgram::minimize();
    for c in &problem.first_stage_cost {
        lp.add_var(*c, 0.0, f64::INFINITY);
    }
    push_first_stage_rows(problem, &mut lp);
    let sol = lp.solve()?;
    match sol.status {
        LpStatus::Optimal => Ok(sol.primal),
        LpStatus::Infeasible => Err(RegretError::InfeasibleFirstStage(
            sol.witness.unwrap_or_default(),
        )),
        LpStatus::Unbounded => Err(RegretError::UnboundedMain(sol.witness.unwrap_or_default())),
    }
}

/// Checks that the design system admits a second stage for the given `x`.
pub(super) fn second_stage_feasible(
    problem: &GenericRegretProblem,
    x: &[f64],
) -> Result<(), RegretError> {
    let mut lp = design_stage_lp(problem, x, &vec![0.0; problem.n_prices()]);
    lp.set_objective(vec![0.0; problem.n_y()]);
    let sol = lp.solve()?;
    if sol.status == LpStatus::Optimal {
        Ok(())
    } else {
        Err(RegretError::RecourseViolated(format!(
            "second stage infeasible for a first-stage-feasible design: {}",
            sol.witness.unwrap_or_default()
        )))
    }
}

/// Warm-startable re-solve helper: tries the hint first, falls back to the
/// cold path inside the kernel automatically.
pub(super) fn solve_maybe_warm(
    lp: &LinearProgram,
    hint: Option<&BasisHint>,
) -> Result<LpSolution, RegretError> {
    let sol = match hint {
        Some(h) => lp.solve_with_hint(h)?,
        None => lp.solve()?,
    };
    Ok(sol)
}
