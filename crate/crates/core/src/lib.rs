//! Robust sizing of building energy supply systems under price uncertainty.
//!
//! `minregret` picks device and storage sizes (the *here-and-now* decision)
//! for a building that must meet heating and cooling loads on a set of
//! weighted representative days, while the operating schedule (the
//! *wait-and-see* decision) adapts to whatever energy prices materialize
//! inside a box-shaped uncertainty set. The objective is worst-case cost
//! regret: the gap between the cost of operating the chosen design under a
//! price scenario and the best cost achievable had that scenario been known
//! up front. An annual carbon cap turns the bi-criteria problem into a
//! family of single-objective ones, and sweeping the cap traces a trade-off
//! front.
//!
//! The engine solves the min-max-regret problem with constraint generation
//! (CG) or column-and-constraint generation (C&CG) on top of a
//! self-contained bounded-variable simplex kernel; the inner worst-case
//! price search is an exact branch-and-bound over the price box.
//!
//! ```
//! use minregret::scalarize::{self, ComparatorMode};
//! use minregret::regret::{Algorithm, GenericRegretProblem, RegretConfig};
//! use minregret::uncertainty::PriceBox;
//!
//! // A small synthetic instance: one day, two steps, gas + electric heating.
//! let instance = minregret::synthetic::gas_electric_toy(2, 1, 2, 7);
//! let compiled = minregret::model::build_standard_form(&instance).unwrap();
//!
//! // No price uncertainty and a carbon-capped comparator: regret must be 0.
//! let boxed = PriceBox::new(instance.prices.clone(), 0.0).unwrap();
//! let base = GenericRegretProblem::assemble(&compiled, &boxed).unwrap();
//! let capped =
//!     scalarize::apply_carbon_cap(&base, &instance, 1.0e6, ComparatorMode::CarbonCapped)
//!         .unwrap();
//! let cert = minregret::regret::run(&capped, Algorithm::Ccg, &RegretConfig::with_epsilon(1.0))
//!     .unwrap();
//! assert!(cert.upper_bound.abs() < 1e-4);
//! ```

pub mod cluster;
pub mod lp;
pub mod model;
pub mod oracle;
pub mod regret;
pub mod rng;
pub mod scalarize;
pub mod sparse;
pub mod synthetic;
pub mod uncertainty;
