//! Deterministic linear-programming kernel.
//!
//! A self-contained revised simplex over bounded variables. Every other
//! module talks to it only through [`LinearProgram::solve`] and
//! [`LinearProgram::solve_with_hint`], so an external solver could be
//! substituted behind the same seam without touching callers.
//!
//! The kernel aims for correctness and reproducibility rather than raw
//! speed: dense basis inverse with periodic refactorization, Dantzig
//! pricing with Bland's rule engaged after a budget of degenerate pivots,
//! and fixed tie-breaking everywhere. Identical inputs produce bit-identical
//! outputs.

mod simplex;
#[cfg(test)]
mod tests;

use thiserror::Error;

/// Objective direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

/// Row comparison operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Error)]
pub enum LpError {
    /// Dimension mismatch, NaN/infinite coefficient, crossed bounds, ...
    #[error("malformed problem: {0}")]
    MalformedProblem(String),
    /// The pivoting loop lost numerical footing and no fallback applied.
    #[error("numerical breakdown: {0}")]
    NumericalBreakdown(String),
}

/// Solver tolerances and limits. The defaults are fixed constants suitable
/// for desk-scale instances; callers may override per solve.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Row/bound feasibility tolerance (scaled by `1 + |rhs|`).
    pub feas_tol: f64,
    /// Minimum acceptable pivot magnitude.
    pub pivot_tol: f64,
    /// Complementary-slackness tolerance used by [`LpSolution::certify`].
    pub comp_tol: f64,
    /// Reduced-cost threshold for optimality (scaled by `1 + max|c|`).
    pub opt_tol: f64,
    /// Hard cap on simplex pivots across both phases.
    pub max_pivots: usize,
    /// Basis inverse is rebuilt from scratch every this many pivots.
    pub refactor_every: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            feas_tol: 1e-7,
            pivot_tol: 1e-9,
            comp_tol: 1e-6,
            opt_tol: 1e-9,
            max_pivots: 500_000,
            refactor_every: 100,
        }
    }
}

/// Identity of a basis member: a structural column or the slack of a row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisKey {
    Column(usize),
    Slack(usize),
}

/// Snapshot of an optimal basis, reusable as a warm start for a later solve
/// over the same variable set (the row set may have grown in between).
#[derive(Debug, Clone, Default)]
pub struct BasisHint {
    /// Members of the basis.
    pub basic: Vec<BasisKey>,
    /// Nonbasic variables that sit at their upper bound.
    pub at_upper: Vec<BasisKey>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Primal/dual solution of a [`LinearProgram`].
///
/// Duals are shadow prices: `duals[i]` is the change of the optimal
/// objective per unit increase of `rhs[i]`, in the problem's own sense.
#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    pub objective_value: f64,
    pub primal: Vec<f64>,
    pub duals: Vec<f64>,
    pub reduced_costs: Vec<f64>,
    /// Basis snapshot for warm starts (empty unless `Optimal`).
    pub basis: BasisHint,
    /// Human-readable cause for `Infeasible`/`Unbounded`.
    pub witness: Option<String>,
    /// Simplex pivots spent.
    pub pivots: usize,
}

/// Residuals of an optimal solution, for self-checks.
#[derive(Debug, Clone, Copy)]
pub struct Certification {
    /// Max row/bound violation, scaled by `1 + |rhs|` per row.
    pub primal_residual: f64,
    /// `|primal objective - dual objective| / (1 + |objective|)`.
    pub dual_gap: f64,
    /// Max complementary-slackness violation, scaled by `1 + |objective|`.
    pub comp_residual: f64,
}

/// A linear program over bounded variables.
///
/// Rows are stored sparse; bounds may be infinite. Equality rows are handled
/// natively by the engine (they are not split into inequality pairs).
#[derive(Debug, Clone)]
pub struct LinearProgram {
    sense: Sense,
    objective: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    rows: Vec<Vec<(usize, f64)>>,
    relations: Vec<Relation>,
    rhs: Vec<f64>,
    var_names: Vec<Option<String>>,
    row_names: Vec<Option<String>>,
}

impl LinearProgram {
    pub fn new(sense: Sense) -> Self {
        Self {
            sense,
            objective: Vec::new(),
            lower: Vec::new(),
            upper: Vec::new(),
            rows: Vec::new(),
            relations: Vec::new(),
            rhs: Vec::new(),
            var_names: Vec::new(),
            row_names: Vec::new(),
        }
    }

    pub fn minimize() -> Self {
        Self::new(Sense::Minimize)
    }

    pub fn maximize() -> Self {
        Self::new(Sense::Maximize)
    }

    /// Adds a variable with objective coefficient and bounds; returns its
    /// column index.
    pub fn add_var(&mut self, objective: f64, lower: f64, upper: f64) -> usize {
        self.objective.push(objective);
        self.lower.push(lower);
        self.upper.push(upper);
        self.var_names.push(None);
        self.objective.len() - 1
    }

    pub fn add_named_var(&mut self, name: &str, objective: f64, lower: f64, upper: f64) -> usize {
        let j = self.add_var(objective, lower, upper);
        self.var_names[j] = Some(name.to_owned());
        j
    }

    /// Adds a row `sum(terms) relation rhs`; returns its row index.
    /// Duplicate column references within `terms` are accumulated.
    pub fn add_row(&mut self, relation: Relation, rhs: f64, terms: &[(usize, f64)]) -> usize {
        let mut row: Vec<(usize, f64)> = Vec::with_capacity(terms.len());
        for &(c, v) in terms {
            if v == 0.0 {
                continue;
            }
            match row.iter_mut().find(|(rc, _)| *rc == c) {
                Some((_, rv)) => *rv += v,
                None => row.push((c, v)),
            }
        }
        self.rows.push(row);
        self.relations.push(relation);
        self.rhs.push(rhs);
        self.row_names.push(None);
        self.rows.len() - 1
    }

    pub fn add_named_row(
        &mut self,
        name: &str,
        relation: Relation,
        rhs: f64,
        terms: &[(usize, f64)],
    ) -> usize {
        let i = self.add_row(relation, rhs, terms);
        self.row_names[i] = Some(name.to_owned());
        i
    }

    pub fn set_var_name(&mut self, j: usize, name: &str) {
        self.var_names[j] = Some(name.to_owned());
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn sense(&self) -> Sense {
        self.sense
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    /// Replaces the objective vector, keeping everything else. The warm-start
    /// path relies on this for sweeps where only prices move.
    pub fn set_objective(&mut self, objective: Vec<f64>) {
        assert_eq!(objective.len(), self.num_vars());
        self.objective = objective;
    }

    /// Tightens or relaxes the bounds of an existing variable.
    pub fn set_bounds(&mut self, j: usize, lower: f64, upper: f64) {
        self.lower[j] = lower;
        self.upper[j] = upper;
    }

    pub fn bounds(&self, j: usize) -> (f64, f64) {
        (self.lower[j], self.upper[j])
    }

    pub fn row(&self, i: usize) -> (&[(usize, f64)], Relation, f64) {
        (&self.rows[i], self.relations[i], self.rhs[i])
    }

    pub fn var_name(&self, j: usize) -> String {
        match &self.var_names[j] {
            Some(n) => n.clone(),
            None => format!("x{j}"),
        }
    }

    pub fn row_name(&self, i: usize) -> String {
        match &self.row_names[i] {
            Some(n) => n.clone(),
            None => format!("r{i}"),
        }
    }

    /// Structural sanity: finite coefficients, consistent dimensions,
    /// `lower <= upper` everywhere.
    pub fn validate(&self) -> Result<(), LpError> {
        let n = self.num_vars();
        for (j, &c) in self.objective.iter().enumerate() {
            if !c.is_finite() {
                return Err(LpError::MalformedProblem(format!(
                    "objective coefficient of {} is not finite",
                    self.var_name(j)
                )));
            }
        }
        for j in 0..n {
            let (lo, hi) = (self.lower[j], self.upper[j]);
            if lo.is_nan() || hi.is_nan() {
                return Err(LpError::MalformedProblem(format!(
                    "bound of {} is NaN",
                    self.var_name(j)
                )));
            }
            if lo > hi {
                return Err(LpError::MalformedProblem(format!(
                    "bounds of {} are crossed ({lo} > {hi})",
                    self.var_name(j)
                )));
            }
        }
        for (i, row) in self.rows.iter().enumerate() {
            if !self.rhs[i].is_finite() {
                return Err(LpError::MalformedProblem(format!(
                    "rhs of {} is not finite",
                    self.row_name(i)
                )));
            }
            for &(c, v) in row {
                if c >= n {
                    return Err(LpError::MalformedProblem(format!(
                        "row {} references column {c} beyond {n}",
                        self.row_name(i)
                    )));
                }
                if !v.is_finite() {
                    return Err(LpError::MalformedProblem(format!(
                        "coefficient in row {} is not finite",
                        self.row_name(i)
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn solve(&self) -> Result<LpSolution, LpError> {
        simplex::solve(self, None, &SolverConfig::default())
    }

    /// Solves starting from a previous basis. An inconsistent hint falls
    /// back silently to a cold start.
    pub fn solve_with_hint(&self, hint: &BasisHint) -> Result<LpSolution, LpError> {
        simplex::solve(self, Some(hint), &SolverConfig::default())
    }

    pub fn solve_with_config(
        &self,
        hint: Option<&BasisHint>,
        config: &SolverConfig,
    ) -> Result<LpSolution, LpError> {
        simplex::solve(self, hint, config)
    }

    /// Fixed-layout text dump (objective line, one constraint per line,
    /// bounds section) for external cross-checking.
    pub fn to_lp_text(&self) -> String {
        use std::fmt::Write as _;
        let mut out = String::new();
        let sense = match self.sense {
            Sense::Minimize => "minimize",
            Sense::Maximize => "maximize",
        };
        let term = |j: usize, v: f64| format!("{:+} {}", v, self.var_name(j));
        let mut obj = String::new();
        for (j, &c) in self.objective.iter().enumerate() {
            if c != 0.0 {
                if !obj.is_empty() {
                    obj.push(' ');
                }
                obj.push_str(&term(j, c));
            }
        }
        let _ = writeln!(out, "{sense}: {obj}");
        let _ = writeln!(out, "subject to:");
        for (i, row) in self.rows.iter().enumerate() {
            let rel = match self.relations[i] {
                Relation::Le => "<=",
                Relation::Ge => ">=",
                Relation::Eq => "=",
            };
            let mut lhs = String::new();
            for &(c, v) in row {
                if !lhs.is_empty() {
                    lhs.push(' ');
                }
                lhs.push_str(&term(c, v));
            }
            let _ = writeln!(out, "  {}: {} {} {}", self.row_name(i), lhs, rel, self.rhs[i]);
        }
        let _ = writeln!(out, "bounds:");
        for j in 0..self.num_vars() {
            let _ = writeln!(
                out,
                "  {} <= {} <= {}",
                self.lower[j],
                self.var_name(j),
                self.upper[j]
            );
        }
        out
    }

    pub(crate) fn internals(
        &self,
    ) -> (
        &[f64],
        &[f64],
        &[f64],
        &[Vec<(usize, f64)>],
        &[Relation],
        &[f64],
    ) {
        (
            &self.objective,
            &self.lower,
            &self.upper,
            &self.rows,
            &self.relations,
            &self.rhs,
        )
    }
}

impl LpSolution {
    /// Evaluates the solution against the problem: primal residual, duality
    /// gap (dual objective built from reduced-cost signs and bounds), and
    /// complementary slackness. Only meaningful for `Optimal` solutions.
    pub fn certify(&self, lp: &LinearProgram) -> Certification {
        let (_, lower, upper, rows, relations, rhs) = lp.internals();
        let sign = match lp.sense() {
            Sense::Minimize => 1.0,
            Sense::Maximize => -1.0,
        };
        let scale = 1.0 + self.objective_value.abs();

        let mut primal_residual: f64 = 0.0;
        for j in 0..lp.num_vars() {
            let x = self.primal[j];
            let viol = (lower[j] - x).max(x - upper[j]).max(0.0);
            primal_residual = primal_residual.max(viol / (1.0 + x.abs()));
        }
        let mut comp_residual: f64 = 0.0;
        for (i, row) in rows.iter().enumerate() {
            let ax: f64 = row.iter().map(|&(c, v)| v * self.primal[c]).sum();
            let (viol, slack) = match relations[i] {
                Relation::Le => (ax - rhs[i], rhs[i] - ax),
                Relation::Ge => (rhs[i] - ax, ax - rhs[i]),
                Relation::Eq => ((ax - rhs[i]).abs(), 0.0),
            };
            primal_residual = primal_residual.max(viol.max(0.0) / (1.0 + rhs[i].abs()));
            // A dual on a slack row must vanish.
            if slack > 0.0 {
                comp_residual = comp_residual.max((self.duals[i] * slack).abs() / scale);
            }
        }

        // Dual objective: y*rhs plus reduced costs applied at the bound their
        // sign certifies (in min form), mapped back to the problem sense.
        let mut dual_obj = 0.0;
        for (i, &y) in self.duals.iter().enumerate() {
            dual_obj += sign * y * rhs[i];
        }
        for j in 0..lp.num_vars() {
            let d = sign * self.reduced_costs[j];
            if d > 0.0 {
                if lower[j].is_finite() {
                    dual_obj += d * lower[j];
                } else {
                    comp_residual = comp_residual.max(d.abs() / scale);
                }
            } else if d < 0.0 {
                if upper[j].is_finite() {
                    dual_obj += d * upper[j];
                } else {
                    comp_residual = comp_residual.max(d.abs() / scale);
                }
            }
            // Interior variables must have vanishing reduced cost.
            let x = self.primal[j];
            let interior = (x - lower[j]).min(upper[j] - x).max(0.0);
            comp_residual = comp_residual.max((d * interior).abs() / scale / (1.0 + x.abs()));
        }
        let dual_obj = sign * dual_obj;
        Certification {
            primal_residual,
            dual_gap: (self.objective_value - dual_obj).abs() / scale,
            comp_residual,
        }
    }
}
