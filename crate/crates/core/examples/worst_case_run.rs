//! A full column-and-constraint-generation run under a half-width-0.5
//! price box, printing the bound bracket per iteration and the worst-case
//! price scenario it certifies.

use minregret::model::build_standard_form;
use minregret::regret::{run, Algorithm, GenericRegretProblem, RegretConfig};
use minregret::scalarize::{apply_carbon_cap, min_carbon, ComparatorMode};
use minregret::uncertainty::PriceBox;

fn main() {
    let instance = minregret::synthetic::gas_electric_toy(3, 2, 2, 7);
    let compiled = build_standard_form(&instance).expect("valid instance");
    let cap = 1.3 * min_carbon(&instance).expect("feasible");

    let boxed = PriceBox::new(instance.prices.clone(), 0.5).expect("alpha in range");
    let base = GenericRegretProblem::assemble(&compiled, &boxed).expect("assembles");
    let problem =
        apply_carbon_cap(&base, &instance, cap, ComparatorMode::Unconstrained).expect("cap > 0");

    let cert = run(&problem, Algorithm::Ccg, &RegretConfig::with_epsilon(1.0)).expect("solves");
    for record in &cert.history {
        println!(
            "iteration {:>2}: bounds [{:>12.2}, {:>12.2}] EUR/a",
            record.iteration, record.lower, record.upper
        );
    }
    println!("status: {:?}", cert.status);
    println!("worst-case prices:");
    for (name, value) in cert.worst_prices.iter().enumerate().map(|(r, v)| (&problem.price_names[r], v)) {
        println!("  {name:<16} {value:.4} EUR/kWh");
    }
}
