use super::*;
use crate::rng::SplitMix64;

fn assert_close(a: f64, b: f64, tol: f64) {
    assert!((a - b).abs() <= tol, "expected {b}, got {a} (tol {tol})");
}

#[test]
fn one_variable_bound_binding() {
    // min x  s.t. x >= 3, x >= 0
    let mut lp = LinearProgram::minimize();
    let x = lp.add_var(1.0, 0.0, f64::INFINITY);
    lp.add_row(Relation::Ge, 3.0, &[(x, 1.0)]);
    let sol = lp.solve().unwrap();
    assert_eq!(sol.status, LpStatus::Optimal);
    assert_close(sol.objective_value, 3.0, 1e-9);
    assert_close(sol.primal[x], 3.0, 1e-9);
    assert_close(sol.duals[0], 1.0, 1e-9);
}

#[test]
fn simplex_on_unit_triangle() {
    // max x + y  s.t. x + y <= 1, x,y >= 0
    let mut lp = LinearProgram::maximize();
    let x = lp.add_var(1.0, 0.0, f64::INFINITY);
    let y = lp.add_var(1.0, 0.0, f64::INFINITY);
    lp.add_row(Relation::Le, 1.0, &[(x, 1.0), (y, 1.0)]);
    let sol = lp.solve().unwrap();
    assert_eq!(sol.status, LpStatus::Optimal);
    assert_close(sol.objective_value, 1.0, 1e-9);
}

#[test]
fn cheaper_resource_saturates() {
    // min 0.0934 g + 0.095 t  s.t. g + t >= 10; frozen from two-corner
    // enumeration of the feasible segment: g = 10 wins with 0.934.
    let mut lp = LinearProgram::minimize();
    let g = lp.add_var(0.0934, 0.0, f64::INFINITY);
    let t = lp.add_var(0.095, 0.0, f64::INFINITY);
    lp.add_row(Relation::Ge, 10.0, &[(g, 1.0), (t, 1.0)]);
    let sol = lp.solve().unwrap();
    assert_close(sol.objective_value, 0.934, 1e-9);
    assert_close(sol.primal[g], 10.0, 1e-9);
    assert_close(sol.primal[t], 0.0, 1e-12);
}

#[test]
fn equality_rows_native() {
    // min x  s.t. x + y = 5, y <= 3
    let mut lp = LinearProgram::minimize();
    let x = lp.add_var(1.0, 0.0, f64::INFINITY);
    let y = lp.add_var(0.0, 0.0, 3.0);
    lp.add_row(Relation::Eq, 5.0, &[(x, 1.0), (y, 1.0)]);
    let sol = lp.solve().unwrap();
    assert_eq!(sol.status, LpStatus::Optimal);
    assert_close(sol.objective_value, 2.0, 1e-9);
    assert_close(sol.primal[y], 3.0, 1e-9);
}

#[test]
fn free_variable_goes_negative() {
    // min x  s.t. x + y >= 2, 0 <= y <= 5, x free
    let mut lp = LinearProgram::minimize();
    let x = lp.add_var(1.0, f64::NEG_INFINITY, f64::INFINITY);
    let y = lp.add_var(0.0, 0.0, 5.0);
    lp.add_row(Relation::Ge, 2.0, &[(x, 1.0), (y, 1.0)]);
    let sol = lp.solve().unwrap();
    assert_close(sol.objective_value, -3.0, 1e-9);
}

#[test]
fn infeasible_with_witness() {
    let mut lp = LinearProgram::minimize();
    let x = lp.add_var(1.0, 0.0, 2.0);
    lp.add_row(Relation::Ge, 3.0, &[(x, 1.0)]);
    let sol = lp.solve().unwrap();
    assert_eq!(sol.status, LpStatus::Infeasible);
    assert!(sol.witness.is_some());
}

#[test]
fn empty_row_infeasible() {
    let mut lp = LinearProgram::minimize();
    let _ = lp.add_var(1.0, 0.0, 1.0);
    lp.add_row(Relation::Ge, 3.0, &[]);
    let sol = lp.solve().unwrap();
    assert_eq!(sol.status, LpStatus::Infeasible);
    assert!(sol.witness.unwrap().contains("empty row"));
}

#[test]
fn unbounded_ray() {
    // max x  s.t. x >= 1
    let mut lp = LinearProgram::maximize();
    let x = lp.add_var(1.0, 0.0, f64::INFINITY);
    lp.add_row(Relation::Ge, 1.0, &[(x, 1.0)]);
    let sol = lp.solve().unwrap();
    assert_eq!(sol.status, LpStatus::Unbounded);
    assert!(sol.witness.is_some());
}

#[test]
fn unbounded_empty_column() {
    let mut lp = LinearProgram::maximize();
    let _x = lp.add_var(1.0, 0.0, f64::INFINITY);
    let y = lp.add_var(0.0, 0.0, 1.0);
    lp.add_row(Relation::Le, 1.0, &[(y, 1.0)]);
    let sol = lp.solve().unwrap();
    assert_eq!(sol.status, LpStatus::Unbounded);
}

#[test]
fn empty_column_fixed_by_cost() {
    // y never appears in a row; min form wants it at its lower bound.
    let mut lp = LinearProgram::minimize();
    let x = lp.add_var(1.0, 0.0, f64::INFINITY);
    let y = lp.add_var(2.0, 1.0, 4.0);
    lp.add_row(Relation::Ge, 1.0, &[(x, 1.0)]);
    let sol = lp.solve().unwrap();
    assert_close(sol.primal[y], 1.0, 0.0);
    assert_close(sol.objective_value, 3.0, 1e-9);
    assert_close(sol.reduced_costs[y], 2.0, 0.0);
}

#[test]
fn malformed_problems_rejected() {
    let mut lp = LinearProgram::minimize();
    let x = lp.add_var(f64::NAN, 0.0, 1.0);
    lp.add_row(Relation::Ge, 0.0, &[(x, 1.0)]);
    assert!(matches!(lp.solve(), Err(LpError::MalformedProblem(_))));

    let mut lp = LinearProgram::minimize();
    lp.add_var(1.0, 2.0, 1.0);
    assert!(matches!(lp.solve(), Err(LpError::MalformedProblem(_))));
}

#[test]
fn warm_start_is_idempotent() {
    let (lp, cold) = find_optimal_instance(11);
    let warm = lp.solve_with_hint(&cold.basis).unwrap();
    assert_close(warm.objective_value, cold.objective_value, 1e-9);
    assert_eq!(warm.primal, cold.primal);
    assert!(warm.pivots <= 2, "warm start should not pivot, did {}", warm.pivots);
}

#[test]
fn warm_start_with_appended_row() {
    for base in [13, 41, 77] {
        let (mut lp, cold) = find_optimal_instance(base);
        // Cut off the current optimum slightly.
        let terms: Vec<(usize, f64)> = (0..lp.num_vars()).map(|j| (j, 1.0)).collect();
        let total: f64 = cold.primal.iter().sum();
        lp.add_row(Relation::Ge, total + 0.5, &terms);
        let warm = lp.solve_with_hint(&cold.basis).unwrap();
        let fresh = lp.solve().unwrap();
        assert_eq!(warm.status, fresh.status);
        if warm.status == LpStatus::Optimal {
            assert_close(warm.objective_value, fresh.objective_value, 1e-9);
        }
    }
}

#[test]
fn corrupted_hint_falls_back() {
    let (lp, cold) = find_optimal_instance(17);
    let bad = BasisHint {
        basic: vec![BasisKey::Column(999); lp.num_rows()],
        at_upper: vec![],
    };
    let sol = lp.solve_with_hint(&bad).unwrap();
    assert_close(sol.objective_value, cold.objective_value, 1e-9);
}

#[test]
fn deterministic_repeat() {
    let lp = small_random_lp(23);
    let a = lp.solve().unwrap();
    let b = lp.solve().unwrap();
    assert_eq!(a.objective_value.to_bits(), b.objective_value.to_bits());
    for (x, y) in a.primal.iter().zip(&b.primal) {
        assert_eq!(x.to_bits(), y.to_bits());
    }
}

#[test]
fn objective_scaling_keeps_support() {
    let lp = small_random_lp(29);
    let base = lp.solve().unwrap();
    assert_eq!(base.status, LpStatus::Optimal);
    let mut scaled = lp.clone();
    scaled.set_objective(lp.objective().iter().map(|c| 3.5 * c).collect());
    let s = scaled.solve().unwrap();
    assert_close(s.objective_value, 3.5 * base.objective_value, 1e-7 * (1.0 + base.objective_value.abs()));
    let support = |sol: &LpSolution| -> Vec<bool> {
        sol.primal.iter().map(|&v| v.abs() > 1e-9).collect()
    };
    assert_eq!(support(&s), support(&base));
}

#[test]
fn vertex_property_holds() {
    for seed in [3, 5, 7, 9] {
        let lp = small_random_lp(seed);
        let sol = lp.solve().unwrap();
        if sol.status != LpStatus::Optimal {
            continue;
        }
        let mut interior = 0;
        for j in 0..lp.num_vars() {
            let (lo, hi) = lp.bounds(j);
            let x = sol.primal[j];
            if x > lo + 1e-7 && x < hi - 1e-7 {
                interior += 1;
            }
        }
        assert!(
            interior <= lp.num_rows(),
            "{} interior variables exceed {} rows",
            interior,
            lp.num_rows()
        );
    }
}

#[test]
fn random_lps_certify() {
    // Strong duality + feasibility + complementary slackness is a complete
    // optimality certificate, so this is an independent check of the pivot
    // logic over a spread of shapes.
    let mut optimal = 0;
    for seed in 0..120 {
        let lp = small_random_lp(seed);
        let sol = lp.solve().unwrap();
        if sol.status != LpStatus::Optimal {
            continue;
        }
        optimal += 1;
        let cert = sol.certify(&lp);
        assert!(cert.primal_residual <= 1e-7, "seed {seed}: primal residual {}", cert.primal_residual);
        assert!(cert.dual_gap <= 1e-7, "seed {seed}: dual gap {}", cert.dual_gap);
        assert!(cert.comp_residual <= 1e-6, "seed {seed}: comp residual {}", cert.comp_residual);
    }
    assert!(optimal >= 60, "too few optimal instances ({optimal}) to be meaningful");
}

#[test]
fn two_variable_grid_oracle() {
    // For 2-variable boxes a coarse grid provides a primal bound: every grid
    // point is feasible, so the LP optimum cannot exceed the grid minimum.
    for seed in 100..130 {
        let lp = grid_friendly_lp(seed);
        let sol = lp.solve().unwrap();
        let mut best = f64::INFINITY;
        let steps = 160;
        let (l0, u0) = lp.bounds(0);
        let (l1, u1) = lp.bounds(1);
        for a in 0..=steps {
            let x0 = l0 + (u0 - l0) * a as f64 / steps as f64;
            for b in 0..=steps {
                let x1 = l1 + (u1 - l1) * b as f64 / steps as f64;
                let feasible = (0..lp.num_rows()).all(|i| {
                    let (terms, rel, rhs) = lp.row(i);
                    let ax: f64 = terms
                        .iter()
                        .map(|&(c, v)| v * if c == 0 { x0 } else { x1 })
                        .sum();
                    match rel {
                        Relation::Le => ax <= rhs + 1e-9,
                        Relation::Ge => ax >= rhs - 1e-9,
                        Relation::Eq => (ax - rhs).abs() <= 1e-9,
                    }
                });
                if feasible {
                    let v = lp.objective()[0] * x0 + lp.objective()[1] * x1;
                    best = best.min(v);
                }
            }
        }
        if best.is_finite() {
            assert_eq!(sol.status, LpStatus::Optimal, "seed {seed}");
            assert!(
                sol.objective_value <= best + 1e-6,
                "seed {seed}: lp {} vs grid {best}",
                sol.objective_value
            );
        }
    }
}

#[test]
fn lp_text_dump_layout() {
    let mut lp = LinearProgram::minimize();
    let x = lp.add_named_var("gas", 0.0934, 0.0, f64::INFINITY);
    lp.add_named_row("demand", Relation::Ge, 10.0, &[(x, 1.0)]);
    let text = lp.to_lp_text();
    assert!(text.starts_with("minimize:"));
    assert!(text.contains("demand:"));
    assert!(text.contains("bounds:"));
}

/// First random instance at or after `seed` that solves to optimality.
fn find_optimal_instance(seed: u64) -> (LinearProgram, LpSolution) {
    for s in seed.. {
        let lp = small_random_lp(s);
        if let Ok(sol) = lp.solve() {
            if sol.status == LpStatus::Optimal {
                return (lp, sol);
            }
        }
    }
    unreachable!()
}

/// Random bounded LP with up to 6 variables and 5 rows. Row right-hand
/// sides are placed around a random in-bounds point, so the instances are
/// feasible by construction (they may still be unbounded).
fn small_random_lp(seed: u64) -> LinearProgram {
    let mut rng = SplitMix64::new(seed.wrapping_mul(0x9e37) + 1);
    let n = 2 + rng.below(5);
    let m = 1 + rng.below(5);
    let mut lp = if rng.below(2) == 0 {
        LinearProgram::minimize()
    } else {
        LinearProgram::maximize()
    };
    let mut anchor = Vec::with_capacity(n);
    for _ in 0..n {
        let c = rng.uniform(-5.0, 5.0);
        let (lo, hi) = match rng.below(4) {
            0 => (0.0, f64::INFINITY),
            1 => (rng.uniform(-3.0, 0.0), rng.uniform(0.5, 6.0)),
            2 => (0.0, rng.uniform(1.0, 8.0)),
            _ => (f64::NEG_INFINITY, rng.uniform(0.0, 4.0)),
        };
        lp.add_var(c, lo, hi);
        let a_lo = if lo.is_finite() { lo } else { -4.0 };
        let a_hi = if hi.is_finite() { hi } else { a_lo + 4.0 };
        anchor.push(rng.uniform(a_lo, a_hi));
    }
    for _ in 0..m {
        let terms: Vec<(usize, f64)> = (0..n)
            .filter_map(|j| {
                if rng.below(4) == 0 {
                    None
                } else {
                    Some((j, rng.uniform(-4.0, 4.0)))
                }
            })
            .collect();
        let at_anchor: f64 = terms.iter().map(|&(j, v)| v * anchor[j]).sum();
        let (rel, rhs) = match rng.below(3) {
            0 => (Relation::Le, at_anchor + rng.uniform(0.0, 3.0)),
            1 => (Relation::Ge, at_anchor - rng.uniform(0.0, 3.0)),
            _ => (Relation::Eq, at_anchor),
        };
        lp.add_row(rel, rhs, &terms);
    }
    lp
}

/// Two box-bounded variables, inequality rows only: safe to grid-scan.
fn grid_friendly_lp(seed: u64) -> LinearProgram {
    let mut rng = SplitMix64::new(seed.wrapping_mul(31) + 7);
    let mut lp = LinearProgram::minimize();
    for _ in 0..2 {
        lp.add_var(rng.uniform(-3.0, 3.0), rng.uniform(-4.0, 0.0), rng.uniform(0.5, 5.0));
    }
    for _ in 0..(1 + rng.below(4)) {
        let terms = vec![(0, rng.uniform(-3.0, 3.0)), (1, rng.uniform(-3.0, 3.0))];
        let rel = if rng.below(2) == 0 { Relation::Le } else { Relation::Ge };
        lp.add_row(rel, rng.uniform(-4.0, 4.0), &terms);
    }
    lp
}
