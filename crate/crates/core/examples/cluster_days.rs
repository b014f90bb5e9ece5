//! k-medoids selection of representative days from a year of synthetic
//! profiles: two seasonal regimes collapse into two weighted cluster days.

use minregret::cluster::{k_medoids, DayProfile};
use minregret::rng::SplitMix64;

fn main() {
    let mut rng = SplitMix64::new(2024);
    let mut profiles = Vec::new();
    for day in 0..365 {
        // Winter days are heating-heavy, summer days cooling-heavy.
        let winter = day < 120 || day >= 300;
        let (heat_base, cold_base) = if winter { (9.0, 1.0) } else { (2.0, 6.0) };
        profiles.push(DayProfile {
            tag: format!("day{day:03}"),
            heat: (0..4).map(|_| heat_base + rng.uniform(0.0, 1.5)).collect(),
            cold: (0..4).map(|_| cold_base + rng.uniform(0.0, 1.0)).collect(),
            extra: vec![],
        });
    }

    let clustered = k_medoids(&profiles, 2, 42).expect("clusters");
    for (medoid, weight) in clustered.medoids.iter().zip(&clustered.weights) {
        println!("medoid {} carries {weight:.1} days/a", profiles[*medoid].tag);
    }
    let total: f64 = clustered.weights.iter().sum();
    assert!((total - 365.0).abs() < 1e-9);
    println!("total weight: {total} days");
}
