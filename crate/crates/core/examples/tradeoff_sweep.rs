//! Sweeps a small (alpha, carbon cap) grid and prints the trade-off front
//! CSV: tighter caps and wider price boxes both push the certified
//! worst-case regret up.

use minregret::regret::{Algorithm, RegretConfig};
use minregret::scalarize::{front_csv, min_carbon, sweep, ComparatorMode};

fn main() {
    let instance = minregret::synthetic::gas_electric_toy(2, 1, 1, 42);
    let floor = min_carbon(&instance).expect("feasible");
    let alphas = [0.25, 0.5, 0.75];
    let caps: Vec<f64> = [1.005, 1.03, 1.08].iter().map(|m| m * floor).collect();

    let records = sweep(
        &instance,
        &alphas,
        &caps,
        Algorithm::Ccg,
        &RegretConfig::with_epsilon(1.0),
        ComparatorMode::Unconstrained,
        2,
    )
    .expect("sweep runs");
    print!("{}", front_csv(&records));
}
