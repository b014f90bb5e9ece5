//! Two-phase revised simplex over bounded variables.
//!
//! Internal formulation: every row `a.x (rel) b` gets a logical variable
//! `s` with bounds chosen by the relation (`<=`: `[0, inf)`, `>=`:
//! `(-inf, 0]`, `=`: `[0, 0]`), giving `a.x + s = b`. Phase 1 drives
//! bound violations of basic variables to zero with the composite
//! (+1/-1) costing; phase 2 runs the ordinary bounded ratio test. The
//! basis inverse is kept explicitly and refreshed periodically.

use super::{
    BasisHint, BasisKey, LinearProgram, LpError, LpSolution, LpStatus, Relation, Sense,
    SolverConfig,
};

const TIE_TOL: f64 = 1e-10;

pub(super) fn solve(
    lp: &LinearProgram,
    hint: Option<&BasisHint>,
    cfg: &SolverConfig,
) -> Result<LpSolution, LpError> {
    lp.validate()?;
    let (objective, lower, upper, rows, relations, rhs) = lp.internals();
    let sense_sign = match lp.sense() {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    let n = objective.len();
    let m_all = rows.len();

    // Presolve: drop empty rows (after a feasibility check) and fix empty
    // columns at the bound their cost sign favors.
    let mut col_used = vec![false; n];
    for row in rows {
        for &(c, v) in row {
            if v != 0.0 {
                col_used[c] = true;
            }
        }
    }
    let mut keep_row = vec![true; m_all];
    for i in 0..m_all {
        if rows[i].iter().all(|&(_, v)| v == 0.0) {
            keep_row[i] = false;
            let tol = cfg.feas_tol * (1.0 + rhs[i].abs());
            let ok = match relations[i] {
                Relation::Le => 0.0 <= rhs[i] + tol,
                Relation::Ge => 0.0 >= rhs[i] - tol,
                Relation::Eq => rhs[i].abs() <= tol,
            };
            if !ok {
                return Ok(infeasible_result(
                    lp,
                    format!("empty row {} cannot hold (rhs {})", lp.row_name(i), rhs[i]),
                ));
            }
        }
    }
    let mut fixed_value = vec![0.0_f64; n];
    let mut unbounded_empty: Option<usize> = None;
    for j in 0..n {
        if col_used[j] {
            continue;
        }
        let c_min = sense_sign * objective[j];
        let v = if c_min > 0.0 {
            if lower[j].is_finite() {
                lower[j]
            } else {
                unbounded_empty.get_or_insert(j);
                0.0
            }
        } else if c_min < 0.0 {
            if upper[j].is_finite() {
                upper[j]
            } else {
                unbounded_empty.get_or_insert(j);
                0.0
            }
        } else if lower[j].is_finite() {
            lower[j]
        } else if upper[j].is_finite() {
            upper[j]
        } else {
            0.0
        };
        fixed_value[j] = v;
    }

    // Index maps between the original and the compressed problem.
    let col_map: Vec<Option<usize>> = {
        let mut next = 0;
        col_used
            .iter()
            .map(|&u| {
                if u {
                    next += 1;
                    Some(next - 1)
                } else {
                    None
                }
            })
            .collect()
    };
    let row_map: Vec<Option<usize>> = {
        let mut next = 0;
        keep_row
            .iter()
            .map(|&k| {
                if k {
                    next += 1;
                    Some(next - 1)
                } else {
                    None
                }
            })
            .collect()
    };
    let kept_cols: Vec<usize> = (0..n).filter(|&j| col_used[j]).collect();
    let kept_rows: Vec<usize> = (0..m_all).filter(|&i| keep_row[i]).collect();

    // Row equilibration: normalize every row to unit max-coefficient so
    // the absolute pivot and feasibility tolerances mean the same thing on
    // every row. Duals are scaled back on output.
    let row_scale: Vec<f64> = kept_rows
        .iter()
        .map(|&i| {
            let biggest = rows[i].iter().fold(0.0_f64, |a, &(_, v)| a.max(v.abs()));
            if biggest > 0.0 {
                1.0 / biggest
            } else {
                1.0
            }
        })
        .collect();
    let cols = kept_cols
        .iter()
        .map(|&j| {
            let mut col = Vec::new();
            for (ci, &i) in kept_rows.iter().enumerate() {
                for &(c, v) in &rows[i] {
                    if c == j && v != 0.0 {
                        col.push((ci, v * row_scale[ci]));
                    }
                }
            }
            col
        })
        .collect();
    let mut core = Core::new(
        cfg,
        kept_cols.len(),
        kept_rows.len(),
        kept_cols
            .iter()
            .map(|&j| sense_sign * objective[j])
            .collect(),
        kept_cols.iter().map(|&j| lower[j]).collect(),
        kept_cols.iter().map(|&j| upper[j]).collect(),
        cols,
        kept_rows
            .iter()
            .enumerate()
            .map(|(ci, &i)| rhs[i] * row_scale[ci])
            .collect(),
        kept_rows.iter().map(|&i| relations[i]).collect(),
    );

    // Warm start: translate the hint into compressed indices; any
    // inconsistency falls back to the cold start silently.
    let mut warm = false;
    if let Some(h) = hint {
        warm = core.try_apply_hint(h, &col_map, &row_map);
    }
    if !warm {
        core.cold_start()?;
    }

    let outcome = core.run()?;
    let pivots = core.pivots;

    match outcome {
        Outcome::Optimal => {
            if let Some(j) = unbounded_empty {
                return Ok(unbounded_result(
                    lp,
                    format!(
                        "variable {} has an improving direction and no finite bound",
                        lp.var_name(j)
                    ),
                    pivots,
                ));
            }
            let mut primal = vec![0.0; n];
            for j in 0..n {
                primal[j] = match col_map[j] {
                    Some(jc) => core.x[jc],
                    None => fixed_value[j],
                };
            }
            let y = core.duals();
            let mut duals = vec![0.0; m_all];
            for i in 0..m_all {
                if let Some(ic) = row_map[i] {
                    // Undo the row equilibration: a row multiplied by s has
                    // its shadow price divided by s.
                    duals[i] = sense_sign * y[ic] * row_scale[ic];
                }
            }
            let mut reduced = vec![0.0; n];
            for j in 0..n {
                reduced[j] = match col_map[j] {
                    Some(jc) => sense_sign * core.reduced_cost(jc, &y),
                    None => objective[j],
                };
            }
            let objective_value: f64 = (0..n).map(|j| objective[j] * primal[j]).sum();
            let mut basic = Vec::with_capacity(core.m);
            for &jc in &core.basis {
                basic.push(if jc < core.n {
                    BasisKey::Column(kept_cols[jc])
                } else {
                    BasisKey::Slack(kept_rows[jc - core.n])
                });
            }
            let mut at_upper = Vec::new();
            for jc in 0..core.nt {
                if core.pos[jc] < 0 && core.at_upper_nb[jc] {
                    at_upper.push(if jc < core.n {
                        BasisKey::Column(kept_cols[jc])
                    } else {
                        BasisKey::Slack(kept_rows[jc - core.n])
                    });
                }
            }
            Ok(LpSolution {
                status: LpStatus::Optimal,
                objective_value,
                primal,
                duals,
                reduced_costs: reduced,
                basis: BasisHint { basic, at_upper },
                witness: None,
                pivots,
            })
        }
        Outcome::Infeasible(witness) => Ok(infeasible_result(lp, witness)),
        Outcome::Unbounded(jc) => {
            let name = if jc < core.n {
                lp.var_name(kept_cols[jc])
            } else {
                format!("slack of {}", lp.row_name(kept_rows[jc - core.n]))
            };
            Ok(unbounded_result(
                lp,
                format!("improving ray along {name} is unblocked"),
                pivots,
            ))
        }
    }
}

fn infeasible_result(lp: &LinearProgram, witness: String) -> LpSolution {
    LpSolution {
        status: LpStatus::Infeasible,
        objective_value: f64::NAN,
        primal: vec![0.0; lp.num_vars()],
        duals: vec![0.0; lp.num_rows()],
        reduced_costs: vec![0.0; lp.num_vars()],
        basis: BasisHint::default(),
        witness: Some(witness),
        pivots: 0,
    }
}

fn unbounded_result(lp: &LinearProgram, witness: String, pivots: usize) -> LpSolution {
    let sign = match lp.sense() {
        Sense::Minimize => -1.0,
        Sense::Maximize => 1.0,
    };
    LpSolution {
        status: LpStatus::Unbounded,
        objective_value: sign * f64::INFINITY,
        primal: vec![0.0; lp.num_vars()],
        duals: vec![0.0; lp.num_rows()],
        reduced_costs: vec![0.0; lp.num_vars()],
        basis: BasisHint::default(),
        witness: Some(witness),
        pivots,
    }
}

enum Outcome {
    Optimal,
    Infeasible(String),
    Unbounded(usize),
}

enum Step {
    Moved,
    Unblocked,
    /// Every admissible pivot fell below tolerance; the caller should
    /// refactorize and try the iteration again before giving up.
    Retry,
}

struct Core<'a> {
    cfg: &'a SolverConfig,
    n: usize,
    m: usize,
    nt: usize,
    cost: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    cols: Vec<Vec<(usize, f64)>>,
    rhs: Vec<f64>,
    basis: Vec<usize>,
    pos: Vec<i64>,
    at_upper_nb: Vec<bool>,
    x: Vec<f64>,
    binv: Vec<f64>,
    pivots: usize,
    pivots_since_refactor: usize,
    degenerate: usize,
    bland: bool,
}

impl<'a> Core<'a> {
    #[allow(clippy::too_many_arguments)]
    fn new(
        cfg: &'a SolverConfig,
        n: usize,
        m: usize,
        struct_cost: Vec<f64>,
        struct_lower: Vec<f64>,
        struct_upper: Vec<f64>,
        cols: Vec<Vec<(usize, f64)>>,
        rhs: Vec<f64>,
        relations: Vec<Relation>,
    ) -> Self {
        let nt = n + m;
        let mut cost = struct_cost;
        let mut lower = struct_lower;
        let mut upper = struct_upper;
        cost.resize(nt, 0.0);
        for rel in &relations {
            let (lo, hi) = match rel {
                Relation::Le => (0.0, f64::INFINITY),
                Relation::Ge => (f64::NEG_INFINITY, 0.0),
                Relation::Eq => (0.0, 0.0),
            };
            lower.push(lo);
            upper.push(hi);
        }
        Self {
            cfg,
            n,
            m,
            nt,
            cost,
            lower,
            upper,
            cols,
            rhs,
            basis: Vec::new(),
            pos: vec![-1; nt],
            at_upper_nb: vec![false; nt],
            x: vec![0.0; nt],
            binv: Vec::new(),
            pivots: 0,
            pivots_since_refactor: 0,
            degenerate: 0,
            bland: false,
        }
    }

    fn cold_start(&mut self) -> Result<(), LpError> {
        self.basis = (self.n..self.nt).collect();
        self.pos = vec![-1; self.nt];
        for (i, &j) in self.basis.iter().enumerate() {
            self.pos[j] = i as i64;
        }
        for j in 0..self.nt {
            self.at_upper_nb[j] =
                self.pos[j] < 0 && !self.lower[j].is_finite() && self.upper[j].is_finite();
        }
        self.binv = identity(self.m);
        self.pivots_since_refactor = 0;
        self.recompute_x();
        Ok(())
    }

    fn try_apply_hint(
        &mut self,
        hint: &BasisHint,
        col_map: &[Option<usize>],
        row_map: &[Option<usize>],
    ) -> bool {
        let translate = |key: &BasisKey| -> Option<usize> {
            match *key {
                BasisKey::Column(j) => col_map.get(j).copied().flatten(),
                BasisKey::Slack(i) => row_map.get(i).copied().flatten().map(|ic| self.n + ic),
            }
        };
        let mut basis = Vec::with_capacity(self.m);
        let mut seen = vec![false; self.nt];
        for key in &hint.basic {
            match translate(key) {
                Some(j) if !seen[j] => {
                    seen[j] = true;
                    basis.push(j);
                }
                _ => return false,
            }
        }
        if basis.len() > self.m {
            return false;
        }
        // Rows beyond the hinted basis (typically freshly appended ones) get
        // their slacks back.
        for i in 0..self.m {
            if basis.len() == self.m {
                break;
            }
            let j = self.n + i;
            if !seen[j] {
                seen[j] = true;
                basis.push(j);
            }
        }
        if basis.len() != self.m {
            return false;
        }
        self.basis = basis;
        self.pos = vec![-1; self.nt];
        for (i, &j) in self.basis.iter().enumerate() {
            self.pos[j] = i as i64;
        }
        self.at_upper_nb = vec![false; self.nt];
        for key in &hint.at_upper {
            if let Some(j) = translate(key) {
                if self.pos[j] < 0 && self.upper[j].is_finite() && self.lower[j] != self.upper[j] {
                    self.at_upper_nb[j] = true;
                }
            }
        }
        for j in 0..self.nt {
            if self.pos[j] < 0
                && !self.at_upper_nb[j]
                && !self.lower[j].is_finite()
                && self.upper[j].is_finite()
            {
                self.at_upper_nb[j] = true;
            }
        }
        if self.factorize().is_err() {
            return false;
        }
        self.recompute_x();
        true
    }

    /// Recovery ladder for suspicious pivot outcomes: refresh the
    /// factorization first, fall back to a from-scratch slack basis once,
    /// and only then let the caller's verdict stand. Returns false when
    /// every rung is spent.
    fn recover(&mut self, fresh: &mut bool, restarted: &mut bool) -> Result<bool, LpError> {
        if !*fresh {
            self.refactor()?;
            self.recompute_x();
            self.snap_feasible();
            *fresh = true;
            return Ok(true);
        }
        if !*restarted {
            *restarted = true;
            self.cold_start()?;
            *fresh = true;
            return Ok(true);
        }
        Ok(false)
    }

    fn run(&mut self) -> Result<Outcome, LpError> {
        let mut fresh = false;
        let mut restarted = false;
        loop {
            // Phase 1: drive bound violations of basics to zero.
            while self.total_infeasibility() > 0.0 {
                if self.pivots >= self.cfg.max_pivots {
                    return Err(LpError::NumericalBreakdown(
                        "pivot budget exhausted in phase 1".into(),
                    ));
                }
                self.maybe_refactor()?;
                let cb: Vec<f64> = (0..self.m)
                    .map(|i| {
                        let j = self.basis[i];
                        let v = self.x[j];
                        if v < self.lower[j] - self.bound_tol(j) {
                            -1.0
                        } else if v > self.upper[j] + self.bound_tol(j) {
                            1.0
                        } else {
                            0.0
                        }
                    })
                    .collect();
                let y = self.btran(&cb);
                // Phase-1 costs are +-1, so the pricing threshold is absolute.
                let Some((q, dir)) = self.price(&y, None, self.cfg.opt_tol) else {
                    return Ok(Outcome::Infeasible(self.infeasibility_witness()));
                };
                match self.ratio_and_apply(q, dir, true)? {
                    Step::Moved => fresh = false,
                    Step::Unblocked => {
                        if !self.recover(&mut fresh, &mut restarted)? {
                            return Err(LpError::NumericalBreakdown(
                                "phase-1 objective decreases without a blocking bound".into(),
                            ));
                        }
                    }
                    Step::Retry => {
                        if !self.recover(&mut fresh, &mut restarted)? {
                            return Err(LpError::NumericalBreakdown(
                                "all blocking pivots stay below tolerance after recovery".into(),
                            ));
                        }
                    }
                }
            }
            // Clean transition into phase 2.
            self.refactor()?;
            self.recompute_x();
            self.snap_feasible();
            if self.total_infeasibility() > 0.0 {
                continue;
            }

            // Phase 2.
            loop {
                if self.pivots >= self.cfg.max_pivots {
                    return Err(LpError::NumericalBreakdown(
                        "pivot budget exhausted in phase 2".into(),
                    ));
                }
                self.maybe_refactor()?;
                if self.total_infeasibility() > 0.0 {
                    break; // drift beyond tolerance: repair in phase 1
                }
                let cb: Vec<f64> = (0..self.m).map(|i| self.cost[self.basis[i]]).collect();
                let y = self.btran(&cb);
                let tol = self.cfg.opt_tol;
                let Some((q, dir)) = self.price(&y, Some(&self.cost), tol) else {
                    // Recompute from a fresh factorization before declaring
                    // optimality, so drift cannot fake convergence.
                    self.refactor()?;
                    self.recompute_x();
                    self.snap_feasible();
                    if self.total_infeasibility() > 0.0 {
                        break;
                    }
                    let cb: Vec<f64> = (0..self.m).map(|i| self.cost[self.basis[i]]).collect();
                    let y = self.btran(&cb);
                    if self.price(&y, Some(&self.cost), tol).is_none() {
                        return Ok(Outcome::Optimal);
                    }
                    continue;
                };
                match self.ratio_and_apply(q, dir, false)? {
                    Step::Moved => fresh = false,
                    Step::Unblocked => {
                        // An ill-conditioned inverse can fabricate an
                        // unblocked ray; believe one only when every
                        // recovery rung is exhausted.
                        if !self.recover(&mut fresh, &mut restarted)? {
                            return Ok(Outcome::Unbounded(q));
                        }
                        if self.total_infeasibility() > 0.0 {
                            break;
                        }
                    }
                    Step::Retry => {
                        if !self.recover(&mut fresh, &mut restarted)? {
                            return Err(LpError::NumericalBreakdown(
                                "all blocking pivots stay below tolerance after recovery".into(),
                            ));
                        }
                        if self.total_infeasibility() > 0.0 {
                            break;
                        }
                    }
                }
            }
        }
    }

    // -- pricing ---------------------------------------------------------

    /// Most-attractive entering column under Dantzig pricing, or the lowest
    /// eligible index once Bland's rule is engaged. `costs` is `None` in
    /// phase 1 (every nonbasic phase-1 cost is zero). The eligibility
    /// threshold scales with each column's own cost magnitude, so one
    /// huge coefficient elsewhere cannot blunt the optimality test.
    fn price(&self, y: &[f64], costs: Option<&[f64]>, tol_base: f64) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64, f64)> = None; // (col, dir, score)
        for j in 0..self.nt {
            if self.pos[j] >= 0 || self.lower[j] == self.upper[j] {
                continue;
            }
            let c_j = costs.map_or(0.0, |c| c[j]);
            let tol = tol_base * (1.0 + c_j.abs());
            let d = c_j - self.col_dot(j, y);
            let free = !self.lower[j].is_finite() && !self.upper[j].is_finite();
            let dir = if free {
                if d < -tol {
                    1.0
                } else if d > tol {
                    -1.0
                } else {
                    continue;
                }
            } else if self.at_upper_nb[j] {
                if d > tol {
                    -1.0
                } else {
                    continue;
                }
            } else if d < -tol {
                1.0
            } else {
                continue;
            };
            if self.bland {
                return Some((j, dir));
            }
            let score = d.abs();
            match best {
                Some((_, _, s)) if s >= score => {}
                _ => best = Some((j, dir, score)),
            }
        }
        best.map(|(j, dir, _)| (j, dir))
    }

    // -- ratio test and pivot application --------------------------------

    /// Harris-style two-pass ratio test followed by the basis exchange.
    ///
    /// Pass 1 computes the smallest *tolerance-relaxed* blocking step; pass 2
    /// picks, among rows whose exact step fits under it, the one with the
    /// largest pivot magnitude. Rows skipped over this way end up violating
    /// their bound by at most the feasibility tolerance, which the periodic
    /// refresh repairs.
    ///
    /// Entries at float-noise level are not treated as movement rates —
    /// but if they were the *only* blockers of an otherwise unbounded
    /// direction, the caller must not trust "unbounded": the test first
    /// asks for a retry on a fresh factorization and, when
    /// `allow_noise_pivot` is set, finally pivots on the largest skipped
    /// blocker rather than fabricating an unbounded ray.
    fn ratio_and_apply(&mut self, q: usize, dir: f64, phase1: bool) -> Result<Step, LpError> {
        let alpha = self.ftran(q);
        let noise = 1e-11 * (1.0 + alpha.iter().fold(0.0_f64, |m, a| m.max(a.abs())));
        let mut t_exact_min = f64::INFINITY;
        let mut t_relax_min = f64::INFINITY;
        // (basis position, exact step, |pivot|, blocking bound, lands at upper)
        let mut candidates: Vec<(usize, f64, f64, f64, bool)> = Vec::new();
        let mut noise_blocker: Option<usize> = None;
        for i in 0..self.m {
            let a = alpha[i];
            if a.abs() <= noise {
                if a != 0.0 {
                    // Remember that sub-noise blockers exist in case the
                    // direction turns out otherwise unblocked.
                    let rate = -dir * a;
                    let j = self.basis[i];
                    let blocked = (rate > 0.0 && self.upper[j].is_finite())
                        || (rate < 0.0 && self.lower[j].is_finite());
                    if blocked && noise_blocker.is_none() {
                        noise_blocker = Some(i);
                    }
                }
                continue;
            }
            let rate = -dir * a;
            let j = self.basis[i];
            let v = self.x[j];
            let tolb = self.bound_tol(j);
            let below = v < self.lower[j] - tolb;
            let above = v > self.upper[j] + tolb;
            let target: Option<(f64, bool)> = if phase1 && below {
                if rate > 0.0 {
                    Some((self.lower[j], false))
                } else {
                    None
                }
            } else if phase1 && above {
                if rate < 0.0 {
                    Some((self.upper[j], true))
                } else {
                    None
                }
            } else if rate > 0.0 && self.upper[j].is_finite() {
                Some((self.upper[j], true))
            } else if rate < 0.0 && self.lower[j].is_finite() {
                Some((self.lower[j], false))
            } else {
                None
            };
            let Some((bound, to_upper)) = target else {
                continue;
            };
            let t = ((bound - v) / rate).max(0.0);
            t_exact_min = t_exact_min.min(t);
            t_relax_min = t_relax_min.min(t + tolb / rate.abs());
            candidates.push((i, t, a.abs(), bound, to_upper));
        }
        let t_self = self.upper[q] - self.lower[q]; // infinite when either bound is
        if !t_relax_min.min(t_self).is_finite() {
            // Blocked only by sub-noise entries: the inverse cannot be
            // trusted to certify a ray; let the caller rebuild the basis.
            return if noise_blocker.is_some() {
                Ok(Step::Retry)
            } else {
                Ok(Step::Unblocked)
            };
        }

        if t_self <= t_relax_min {
            // Bound flip: the entering variable runs to its opposite bound.
            let from = self.nonbasic_value(q);
            for (i, &a) in alpha.iter().enumerate() {
                if a != 0.0 {
                    let j = self.basis[i];
                    self.x[j] -= dir * t_self * a;
                }
            }
            self.at_upper_nb[q] = !self.at_upper_nb[q];
            self.x[q] = from + dir * t_self;
            if t_self <= TIE_TOL {
                self.count_degenerate();
            }
            self.pivots += 1;
            self.pivots_since_refactor += 1;
            return Ok(Step::Moved);
        }

        // Pass 2: admissible rows are those whose exact step fits under the
        // relaxed minimum. Under Bland's rule the exact minimum and lowest
        // column index are used instead, which keeps its termination proof.
        let mut leave: Option<(usize, f64, f64, f64, bool)> = None; // (pos, t, |a|, bound, up)
        for &(i, t, amag, bound, to_upper) in &candidates {
            let admissible = if self.bland {
                t <= t_exact_min + TIE_TOL * (1.0 + t_exact_min.abs())
            } else {
                t <= t_relax_min
            };
            if !admissible {
                continue;
            }
            let better = match leave {
                None => true,
                Some((li, _, lamag, _, _)) => {
                    if self.bland {
                        self.basis[i] < self.basis[li]
                    } else {
                        amag > lamag || (amag == lamag && i < li)
                    }
                }
            };
            if better {
                leave = Some((i, t, amag, bound, to_upper));
            }
        }
        let Some((r, t_star, amag, leave_bound, leave_to_upper)) = leave else {
            return Ok(Step::Retry);
        };
        if amag < self.cfg.pivot_tol {
            return Ok(Step::Retry);
        }

        if t_star <= TIE_TOL {
            self.count_degenerate();
        }

        // Move values, then exchange basis members.
        let from = self.nonbasic_value(q);
        for (i, &a) in alpha.iter().enumerate() {
            if a != 0.0 {
                let j = self.basis[i];
                self.x[j] -= dir * t_star * a;
            }
        }
        self.x[q] = from + dir * t_star;

        let leaving = self.basis[r];
        self.x[leaving] = leave_bound;
        self.at_upper_nb[leaving] = leave_to_upper && self.lower[leaving] != self.upper[leaving];

        self.basis[r] = q;
        self.pos[q] = r as i64;
        self.pos[leaving] = -1;
        self.at_upper_nb[q] = false;

        // Product-form update of the explicit inverse.
        let pivot = alpha[r];
        let m = self.m;
        let row_r: Vec<f64> = (0..m).map(|k| self.binv[r * m + k] / pivot).collect();
        for i in 0..m {
            if i == r {
                continue;
            }
            let f = alpha[i];
            if f == 0.0 {
                continue;
            }
            for k in 0..m {
                self.binv[i * m + k] -= f * row_r[k];
            }
        }
        self.binv[r * m..(r + 1) * m].copy_from_slice(&row_r);

        self.pivots += 1;
        self.pivots_since_refactor += 1;
        Ok(Step::Moved)
    }

    // -- linear algebra ---------------------------------------------------

    fn col_dot(&self, j: usize, y: &[f64]) -> f64 {
        if j < self.n {
            self.cols[j].iter().map(|&(r, v)| v * y[r]).sum()
        } else {
            y[j - self.n]
        }
    }

    fn ftran(&self, j: usize) -> Vec<f64> {
        let m = self.m;
        let mut out = vec![0.0; m];
        if j < self.n {
            for &(r, v) in &self.cols[j] {
                for (i, o) in out.iter_mut().enumerate() {
                    *o += self.binv[i * m + r] * v;
                }
            }
        } else {
            let r = j - self.n;
            for (i, o) in out.iter_mut().enumerate() {
                *o = self.binv[i * m + r];
            }
        }
        out
    }

    fn btran(&self, cb: &[f64]) -> Vec<f64> {
        let m = self.m;
        let mut y = vec![0.0; m];
        for (i, &ci) in cb.iter().enumerate() {
            if ci == 0.0 {
                continue;
            }
            for (k, yk) in y.iter_mut().enumerate() {
                *yk += ci * self.binv[i * m + k];
            }
        }
        y
    }

    fn maybe_refactor(&mut self) -> Result<(), LpError> {
        if self.pivots_since_refactor >= self.cfg.refactor_every {
            self.refactor()?;
            self.recompute_x();
        }
        Ok(())
    }

    /// Rebuilds the inverse of the current basis; fails on singularity.
    fn factorize(&mut self) -> Result<(), LpError> {
        let m = self.m;
        let mut b = vec![0.0; m * m];
        for (i, &j) in self.basis.iter().enumerate() {
            if j < self.n {
                for &(r, v) in &self.cols[j] {
                    b[r * m + i] = v;
                }
            } else {
                b[(j - self.n) * m + i] = 1.0;
            }
        }
        self.binv = invert(&mut b, m, self.cfg.pivot_tol).ok_or_else(|| {
            LpError::NumericalBreakdown("basis matrix is numerically singular".into())
        })?;
        self.pivots_since_refactor = 0;
        Ok(())
    }

    /// Like [`Core::factorize`], but numerically dependent basis columns
    /// are repaired: each one is replaced by the slack of a row the
    /// elimination never pivoted on, which restores full rank. Kicked-out
    /// members land on their nearest bound; any feasibility damage is
    /// phase-1's ordinary job.
    fn refactor(&mut self) -> Result<(), LpError> {
        for _ in 0..3 {
            if self.factorize().is_ok() {
                return Ok(());
            }
            let m = self.m;
            let mut b = vec![0.0; m * m];
            for (i, &j) in self.basis.iter().enumerate() {
                if j < self.n {
                    for &(r, v) in &self.cols[j] {
                        b[r * m + i] = v;
                    }
                } else {
                    b[(j - self.n) * m + i] = 1.0;
                }
            }
            let (dependent, unused_rows) = rank_probe(&mut b, m, self.cfg.pivot_tol);
            if dependent.is_empty() || dependent.len() != unused_rows.len() {
                break;
            }
            for (&pos, &row) in dependent.iter().zip(&unused_rows) {
                let slack = self.n + row;
                if self.pos[slack] >= 0 {
                    // The replacement slack is already basic elsewhere;
                    // give up on repairing this basis.
                    return Err(LpError::NumericalBreakdown(
                        "basis repair failed: replacement slack already basic".into(),
                    ));
                }
                let leaving = self.basis[pos];
                self.pos[leaving] = -1;
                let (lo, hi) = (self.lower[leaving], self.upper[leaving]);
                self.at_upper_nb[leaving] = if lo.is_finite() && hi.is_finite() {
                    (self.x[leaving] - hi).abs() < (self.x[leaving] - lo).abs()
                } else {
                    !lo.is_finite() && hi.is_finite()
                };
                self.basis[pos] = slack;
                self.pos[slack] = pos as i64;
                self.at_upper_nb[slack] = false;
            }
        }
        Err(LpError::NumericalBreakdown(
            "basis matrix stays singular after repair".into(),
        ))
    }

    fn nonbasic_value(&self, j: usize) -> f64 {
        if self.at_upper_nb[j] && self.upper[j].is_finite() {
            self.upper[j]
        } else if self.lower[j].is_finite() {
            self.lower[j]
        } else if self.upper[j].is_finite() {
            self.upper[j]
        } else {
            0.0
        }
    }

    fn recompute_x(&mut self) {
        let m = self.m;
        let mut r = self.rhs.clone();
        for j in 0..self.nt {
            if self.pos[j] >= 0 {
                continue;
            }
            let v = self.nonbasic_value(j);
            self.x[j] = v;
            if v == 0.0 {
                continue;
            }
            if j < self.n {
                for &(row, coef) in &self.cols[j] {
                    r[row] -= coef * v;
                }
            } else {
                r[j - self.n] -= v;
            }
        }
        for i in 0..m {
            let mut acc = 0.0;
            for k in 0..m {
                acc += self.binv[i * m + k] * r[k];
            }
            self.x[self.basis[i]] = acc;
        }
    }

    fn count_degenerate(&mut self) {
        self.degenerate += 1;
        if !self.bland && self.degenerate > 2 * (self.m + self.nt) {
            self.bland = true;
        }
    }

    fn bound_tol(&self, j: usize) -> f64 {
        let lo = self.lower[j].abs();
        let hi = self.upper[j].abs();
        let b = if lo.is_finite() && hi.is_finite() {
            lo.min(hi)
        } else if lo.is_finite() {
            lo
        } else if hi.is_finite() {
            hi
        } else {
            0.0
        };
        self.cfg.feas_tol * (1.0 + b)
    }

    fn total_infeasibility(&self) -> f64 {
        let mut total = 0.0;
        for &j in &self.basis {
            let v = self.x[j];
            let tol = self.bound_tol(j);
            if v < self.lower[j] - tol {
                total += self.lower[j] - v;
            } else if v > self.upper[j] + tol {
                total += v - self.upper[j];
            }
        }
        total
    }

    /// Clamp basics that sit within tolerance of a bound onto it, so phase 2
    /// starts from a cleanly feasible point.
    fn snap_feasible(&mut self) {
        for i in 0..self.m {
            let j = self.basis[i];
            let tol = self.bound_tol(j);
            if self.lower[j].is_finite() && (self.x[j] - self.lower[j]).abs() <= tol {
                self.x[j] = self.lower[j];
            } else if self.upper[j].is_finite() && (self.x[j] - self.upper[j]).abs() <= tol {
                self.x[j] = self.upper[j];
            }
        }
    }

    fn infeasibility_witness(&self) -> String {
        let mut parts = Vec::new();
        for &j in &self.basis {
            let v = self.x[j];
            let tol = self.bound_tol(j);
            let gap = if v < self.lower[j] - tol {
                self.lower[j] - v
            } else if v > self.upper[j] + tol {
                v - self.upper[j]
            } else {
                continue;
            };
            let what = if j < self.n {
                format!("column {j}")
            } else {
                format!("row {}", j - self.n)
            };
            parts.push(format!("{what} violates its bound by {gap:.6e}"));
            if parts.len() == 3 {
                break;
            }
        }
        format!(
            "phase-1 optimum retains residual {:.6e} ({})",
            self.total_infeasibility(),
            parts.join("; ")
        )
    }

    fn duals(&self) -> Vec<f64> {
        let cb: Vec<f64> = (0..self.m).map(|i| self.cost[self.basis[i]]).collect();
        self.btran(&cb)
    }

    fn reduced_cost(&self, j: usize, y: &[f64]) -> f64 {
        if self.pos[j] >= 0 {
            0.0
        } else {
            self.cost[j] - self.col_dot(j, y)
        }
    }
}

fn identity(m: usize) -> Vec<f64> {
    let mut i = vec![0.0; m * m];
    for k in 0..m {
        i[k * m + k] = 1.0;
    }
    i
}

/// Gaussian elimination probe: returns the column positions that found no
/// admissible pivot (numerically dependent basis members) and the rows
/// never used as pivot rows. The two lists always have equal length for a
/// square matrix.
fn rank_probe(mat: &mut [f64], m: usize, pivot_tol: f64) -> (Vec<usize>, Vec<usize>) {
    let mut row_used = vec![false; m];
    let mut dependent = Vec::new();
    for col in 0..m {
        let mut best: Option<usize> = None;
        for r in 0..m {
            if row_used[r] {
                continue;
            }
            let better = match best {
                None => true,
                Some(b) => mat[r * m + col].abs() > mat[b * m + col].abs(),
            };
            if better {
                best = Some(r);
            }
        }
        let Some(r) = best else {
            dependent.push(col);
            continue;
        };
        let p = mat[r * m + col];
        if p.abs() < pivot_tol {
            dependent.push(col);
            continue;
        }
        row_used[r] = true;
        for rr in 0..m {
            if row_used[rr] || rr == r {
                continue;
            }
            let f = mat[rr * m + col] / p;
            if f == 0.0 {
                continue;
            }
            for k in 0..m {
                mat[rr * m + k] -= f * mat[r * m + k];
            }
        }
    }
    let unused: Vec<usize> = (0..m).filter(|&r| !row_used[r]).collect();
    (dependent, unused)
}

/// Gauss-Jordan inversion with partial pivoting. Returns `None` when a
/// pivot falls below `pivot_tol`.
fn invert(mat: &mut [f64], m: usize, pivot_tol: f64) -> Option<Vec<f64>> {
    let mut inv = identity(m);
    for col in 0..m {
        let mut best = col;
        for r in col + 1..m {
            if mat[r * m + col].abs() > mat[best * m + col].abs() {
                best = r;
            }
        }
        let p = mat[best * m + col];
        if p.abs() < pivot_tol {
            return None;
        }
        if best != col {
            for k in 0..m {
                mat.swap(best * m + k, col * m + k);
                inv.swap(best * m + k, col * m + k);
            }
        }
        let inv_p = 1.0 / p;
        for k in 0..m {
            mat[col * m + k] *= inv_p;
            inv[col * m + k] *= inv_p;
        }
        for r in 0..m {
            if r == col {
                continue;
            }
            let f = mat[r * m + col];
            if f == 0.0 {
                continue;
            }
            for k in 0..m {
                mat[r * m + k] -= f * mat[col * m + k];
                inv[r * m + k] -= f * inv[col * m + k];
            }
        }
    }
    Some(inv)
}
