//! Builds a small synthetic instance and prints its JSON document.
//!
//! Pipe the output into a file to get a starting point for the CLI:
//! `cargo run --example build_instance > toy.json`

fn main() {
    // Two real converters (gas boiler + compression chiller), one
    // representative day with two steps; backstop generators are added
    // automatically.
    let instance = minregret::synthetic::gas_electric_toy(2, 1, 2, 42);
    println!("{}", instance.to_json_pretty());
}
