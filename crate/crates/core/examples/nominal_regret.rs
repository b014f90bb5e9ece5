//! With no price uncertainty and a carbon-capped comparator, the best
//! design has zero regret: it competes against systems under exactly the
//! same rules and known prices.

use minregret::model::build_standard_form;
use minregret::regret::{run, Algorithm, GenericRegretProblem, RegretConfig};
use minregret::scalarize::{apply_carbon_cap, min_carbon, ComparatorMode};
use minregret::uncertainty::PriceBox;

fn main() {
    let instance = minregret::synthetic::gas_electric_toy(2, 1, 2, 42);
    let compiled = build_standard_form(&instance).expect("valid instance");

    // A cap comfortably above the instance's carbon floor.
    let floor = min_carbon(&instance).expect("real devices cover the loads");
    let cap = 1.5 * floor;
    println!("carbon floor: {floor:.1} kg/a, cap: {cap:.1} kg/a");

    let nominal_only = PriceBox::new(instance.prices.clone(), 0.0).expect("alpha in range");
    let base = GenericRegretProblem::assemble(&compiled, &nominal_only).expect("assembles");
    let problem =
        apply_carbon_cap(&base, &instance, cap, ComparatorMode::CarbonCapped).expect("cap > 0");

    let cert = run(&problem, Algorithm::Ccg, &RegretConfig::with_epsilon(1.0)).expect("solves");
    println!(
        "regret in [{:.6}, {:.6}] EUR/a after {} iterations",
        cert.lower_bound, cert.upper_bound, cert.iterations
    );
    assert!(cert.upper_bound.abs() < 1e-4);
}
