//! The cut-generation loop: alternate master and worst-case subproblem
//! until the bound bracket closes to `epsilon`.

use super::master::master;
use super::subproblem::{solve_worst_case, CornerCache};
use super::{
    Algorithm, GenericRegretProblem, IterationRecord, RegretCertificate, RegretConfig,
    RegretError, RunStatus, Scenario,
};
use std::time::Instant;

fn same_vector(a: &[f64], b: &[f64], rel_tol: f64) -> bool {
    a.len() == b.len()
        && a.iter()
            .zip(b)
            .all(|(x, y)| (x - y).abs() <= rel_tol * (1.0 + y.abs()))
}

/// A scenario that cannot add anything to the master: for `Ccg` the
/// recourse block depends on the prices alone, so a repeated price vector
/// is a repeat; `Cg` cuts live in dual space, where revisiting a price with
/// a fresh dual is ordinary progress, so the dual must repeat too.
fn is_repeat(algorithm: Algorithm, new: &Scenario, pooled: &Scenario, rel_tol: f64) -> bool {
    let prices_match = same_vector(&new.prices, &pooled.prices, rel_tol);
    match algorithm {
        Algorithm::Ccg => prices_match,
        Algorithm::Cg => prices_match && same_vector(&new.dual, &pooled.dual, rel_tol),
    }
}

/// Runs the loop. The lower bound comes from the master optimum, the upper
/// bound from `c.x_k` plus the subproblem's certified upper bound (solving
/// the bilinear subproblem only to `sp_gap` keeps iterations cheap; its
/// bound is valid either way). Cuts are generated from the subproblem
/// incumbents. The certificate's design is the one whose subproblem
/// produced the final upper bound, so the guarantee `regret <= upper_bound`
/// holds for the design actually returned.
pub fn run(
    problem: &GenericRegretProblem,
    algorithm: Algorithm,
    config: &RegretConfig,
) -> Result<RegretCertificate, RegretError> {
    assert!(config.epsilon > 0.0, "epsilon must be positive");
    problem.verify_recourse()?;
    let started = Instant::now();
    let sp_gap = config.sp_gap();

    let mut pool: Vec<Scenario> = Vec::new();
    let mut cache = CornerCache::new();
    let mut history: Vec<IterationRecord> = Vec::new();
    let mut lower = f64::NEG_INFINITY;
    let mut upper = f64::INFINITY;
    let mut best_design: Vec<f64> = Vec::new();
    let mut worst_prices: Vec<f64> = Vec::new();
    let mut sp_gap_reached = true;

    // Iteration 0 solves the cut-free master (the epigraph variable rests
    // on its floor) and seeds the pool with the first scenario.
    let m0 = master(problem, algorithm, &pool, config)?;
    let sp0 = solve_worst_case(problem, &m0.design, sp_gap, config, &mut cache)?;
    sp_gap_reached &= sp0.gap_reached;
    lower = lower.max(m0.objective);
    let candidate = problem.first_stage_cost_of(&m0.design) + sp0.upper;
    if candidate < upper {
        upper = candidate;
        best_design = m0.design.clone();
        worst_prices = sp0.incumbent.prices.clone();
    }
    pool.push(sp0.incumbent);
    let mut k = 1usize;
    history.push(IterationRecord {
        iteration: k,
        lower,
        upper,
        seconds: started.elapsed().as_secs_f64(),
    });

    let mut status = RunStatus::IterationLimit;
    while upper - lower > config.epsilon {
        if k >= config.max_iterations {
            status = RunStatus::IterationLimit;
            break;
        }
        let mk = master(problem, algorithm, &pool, config)?;
        // While the bracket is wide, a coarse subproblem bound suffices for
        // valid updates; tighten toward sp_gap as the gap closes so that
        // subproblem slack never blocks termination.
        let dynamic_gap = if upper.is_finite() && lower > config.eta_floor {
            sp_gap.max(((upper - lower) / 10.0).min(1e4 * sp_gap))
        } else {
            sp_gap
        };
        let mut spk = solve_worst_case(problem, &mk.design, dynamic_gap, config, &mut cache)?;
        // A duplicate incumbent from a coarsely-solved subproblem is not
        // yet evidence of a stall; re-solve at full tightness first.
        if dynamic_gap > sp_gap
            && pool
                .iter()
                .any(|s| is_repeat(algorithm, &spk.incumbent, s, config.dedup_rel_tol))
        {
            spk = solve_worst_case(problem, &mk.design, sp_gap, config, &mut cache)?;
        }
        sp_gap_reached &= spk.gap_reached;
        lower = lower.max(mk.objective);
        let candidate = problem.first_stage_cost_of(&mk.design) + spk.upper;
        if candidate < upper {
            upper = candidate;
            best_design = mk.design.clone();
            worst_prices = spk.incumbent.prices.clone();
        }
        k += 1;
        history.push(IterationRecord {
            iteration: k,
            lower,
            upper,
            seconds: started.elapsed().as_secs_f64(),
        });
        if upper - lower <= config.epsilon {
            status = RunStatus::Converged;
            break;
        }
        // A repeated scenario cannot cut anything new; stop with the
        // current (valid) bracket instead of looping forever.
        if pool
            .iter()
            .any(|s| is_repeat(algorithm, &spk.incumbent, s, config.dedup_rel_tol))
        {
            status = RunStatus::ConvergedByStall;
            break;
        }
        pool.push(spk.incumbent);
    }
    if upper - lower <= config.epsilon {
        status = RunStatus::Converged;
    }
    if !sp_gap_reached && status == RunStatus::Converged {
        // The bracket closed even though some subproblem hit its node
        // budget; the bounds remain valid, so converged stands.
    }

    Ok(RegretCertificate {
        design: best_design,
        lower_bound: lower,
        upper_bound: upper,
        epsilon: config.epsilon,
        iterations: k,
        status,
        algorithm,
        history,
        worst_prices,
        scenarios: pool,
    })
}
