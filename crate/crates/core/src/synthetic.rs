//! Deterministic example instances for tests, benchmarks, and the guide.
//!
//! Every builder derives all randomness from the explicit seed, picks the
//! dummy size as ten times the largest per-step total load, and prices
//! dummy generation at a thousand times the highest nominal price, so the
//! backstops are always dominated whenever real capacity suffices.

use crate::model::{
    CarbonFactors, DeviceSpec, DummyConfig, DummyKind, ModelInstance, PriceVector,
    RepresentativeDay, Roof, StorageSpec, Storages, TimeGrid,
};
use crate::rng::SplitMix64;

/// The nominal price scenario used by all synthetic instances (EUR/kWh).
pub fn nominal_prices() -> PriceVector {
    PriceVector {
        gas: 0.0934,
        electricity_buy: 0.2074,
        electricity_sell: 0.2074,
        district_heat: 0.095,
        wood: 0.0817,
    }
}

fn carbon_factors() -> CarbonFactors {
    CarbonFactors {
        gas: 0.202,
        electricity_buy: 0.4,
        electricity_sell: 0.4,
        district_heat: 0.2,
        wood: 0.025,
    }
}

fn blank_device(name: &str, abbr: &str) -> DeviceSpec {
    DeviceSpec {
        name: name.into(),
        abbreviation: abbr.into(),
        depreciation_price: 0.0,
        depreciation_carbon: 0.0,
        base_depreciation_price: 0.0,
        base_depreciation_carbon: 0.0,
        electricity_in: vec![],
        electricity_out: vec![],
        wood_in: vec![],
        gas_in: vec![],
        district_heat_in: vec![],
        heat_out: vec![],
        cold_out: vec![],
        heat_in_limit: vec![],
        dummy_kind: None,
        roof_area_per_unit: 0.0,
        reversible_partner: None,
        adsorption_linked: false,
    }
}

fn constant_series(days: usize, steps: usize, value: f64) -> Vec<Vec<f64>> {
    vec![vec![value; steps]; days]
}

fn jittered_series(
    days: usize,
    steps: usize,
    base: f64,
    spread: f64,
    rng: &mut SplitMix64,
) -> Vec<Vec<f64>> {
    (0..days)
        .map(|_| (0..steps).map(|_| base + spread * rng.next_f64()).collect())
        .collect()
}

fn loads(days: usize, steps: usize, base: f64, spread: f64, rng: &mut SplitMix64) -> Vec<Vec<f64>> {
    jittered_series(days, steps, base, spread, rng)
}

fn finish_instance(
    steps: usize,
    day_loads: (Vec<Vec<f64>>, Vec<Vec<f64>>),
    mut devices: Vec<DeviceSpec>,
    roof_area: f64,
) -> ModelInstance {
    let (heat, cold) = day_loads;
    let days = heat.len();
    let weight = 365.0 / days as f64;
    let day_list: Vec<RepresentativeDay> = (0..days)
        .map(|k| RepresentativeDay {
            id: format!("day{k}"),
            weight,
            heat_load: heat[k].clone(),
            cold_load: cold[k].clone(),
        })
        .collect();

    let max_step_load = day_list
        .iter()
        .flat_map(|d| d.heat_load.iter().zip(&d.cold_load).map(|(h, c)| h + c))
        .fold(0.0_f64, f64::max);
    let dummy_size = 10.0 * max_step_load.max(1.0);
    let prices = nominal_prices();
    let marginal = 1000.0
        * prices
            .as_array()
            .into_iter()
            .fold(0.0_f64, f64::max);

    let mut heating_dummy = blank_device("heating dummy", "H-Dummy");
    heating_dummy.dummy_kind = Some(DummyKind::Heating);
    heating_dummy.heat_out = constant_series(days, steps, 1.0);
    let mut cooling_dummy = blank_device("cooling dummy", "C-Dummy");
    cooling_dummy.dummy_kind = Some(DummyKind::Cooling);
    cooling_dummy.cold_out = constant_series(days, steps, 1.0);
    devices.push(heating_dummy);
    devices.push(cooling_dummy);

    let instance = ModelInstance {
        grid: TimeGrid { steps_per_day: steps },
        days: day_list,
        devices,
        storages: Storages {
            heat: StorageSpec { price: 0.9, carbon: 0.15 },
            cold: StorageSpec { price: 1.1, carbon: 0.18 },
        },
        prices,
        carbon: carbon_factors(),
        roof: Roof { total_area_m2: roof_area },
        dummy: DummyConfig { size: dummy_size, marginal_cost: marginal },
    };
    debug_assert!(
        !crate::model::has_errors(&crate::model::validate_instance(&instance, 0.0)),
        "synthetic instance must validate"
    );
    instance
}

/// A toy touching only the gas and electricity-buy prices (at most two
/// effective free price components), suitable for exhaustive verification.
///
/// `n_real` selects 1 to 3 real converters. From two devices on, the heat
/// side carries a genuine cost-carbon tension: the gas boiler is cheap and
/// dirty, the heat pump clean and expensive (the coefficient windows keep
/// that ordering for every seed), so moderate carbon caps really bind.
/// Cooling loads appear only once a chiller exists.
pub fn gas_electric_toy(n_real: usize, days: usize, steps: usize, seed: u64) -> ModelInstance {
    assert!((1..=3).contains(&n_real));
    let mut rng = SplitMix64::new(seed ^ 0xabcdef);
    let heat = loads(days, steps, 6.0, 6.0, &mut rng);
    let cold = if n_real >= 3 {
        loads(days, steps, 2.0, 3.0, &mut rng)
    } else {
        vec![vec![0.0; steps]; days]
    };

    let mut devices = Vec::new();
    let mut gb = blank_device("gas boiler", "GB");
    gb.depreciation_price = 5.0 + 2.0 * rng.next_f64();
    gb.depreciation_carbon = 2.5;
    gb.gas_in = jittered_series(days, steps, 1.08, 0.04, &mut rng);
    gb.heat_out = constant_series(days, steps, 1.0);
    devices.push(gb);
    if n_real >= 2 {
        let mut hp = blank_device("air-water heat pump", "AWHP");
        hp.depreciation_price = 13.0 + 3.0 * rng.next_f64();
        hp.depreciation_carbon = 1.0;
        hp.electricity_in = jittered_series(days, steps, 0.52, 0.025, &mut rng);
        hp.heat_out = constant_series(days, steps, 1.0);
        devices.push(hp);
    }
    if n_real >= 3 {
        let mut cc = blank_device("compression chiller", "CC");
        cc.depreciation_price = 9.0 + 5.0 * rng.next_f64();
        cc.depreciation_carbon = 3.0;
        cc.electricity_in = jittered_series(days, steps, 0.3, 0.1, &mut rng);
        cc.cold_out = constant_series(days, steps, 1.0);
        devices.push(cc);
    }
    finish_instance(steps, (heat, cold), devices, 50.0)
}

/// A mid-size instance over gas, electricity, and wood, used by the
/// benchmark grids. Load levels put the carbon floor in the tens of
/// tonnes, so caps of 30-60 t genuinely bind.
pub fn benchmark_instance(days: usize, steps: usize, seed: u64) -> ModelInstance {
    let mut rng = SplitMix64::new(seed ^ 0x5eed);
    let heat = loads(days, steps, 25.0, 22.0, &mut rng);
    let cold = loads(days, steps, 8.0, 8.0, &mut rng);

    let mut devices = Vec::new();
    let mut gb = blank_device("gas boiler", "GB");
    gb.depreciation_price = 7.0;
    gb.depreciation_carbon = 2.5;
    gb.gas_in = jittered_series(days, steps, 1.1, 0.1, &mut rng);
    gb.heat_out = constant_series(days, steps, 1.0);
    devices.push(gb);

    let mut pb = blank_device("pellet boiler", "PB");
    pb.depreciation_price = 10.0;
    pb.depreciation_carbon = 1.2;
    pb.wood_in = jittered_series(days, steps, 1.2, 0.15, &mut rng);
    pb.heat_out = constant_series(days, steps, 1.0);
    devices.push(pb);

    let mut hp = blank_device("air-water heat pump", "AWHP");
    hp.depreciation_price = 13.0;
    hp.depreciation_carbon = 4.0;
    hp.electricity_in = jittered_series(days, steps, 0.3, 0.08, &mut rng);
    hp.heat_out = constant_series(days, steps, 1.0);
    devices.push(hp);

    let mut cc = blank_device("compression chiller", "CC");
    cc.depreciation_price = 9.0;
    cc.depreciation_carbon = 3.0;
    cc.electricity_in = jittered_series(days, steps, 0.25, 0.08, &mut rng);
    cc.cold_out = constant_series(days, steps, 1.0);
    devices.push(cc);

    finish_instance(steps, (heat, cold), devices, 120.0)
}

/// A structurally rich instance: rooftop photovoltaic and solar thermal
/// competing for area, a reversible heat pump pair, district heating with a
/// cogeneration unit, and an adsorption chiller linked to their sizes.
pub fn rooftop_instance(days: usize, steps: usize, seed: u64) -> ModelInstance {
    let mut rng = SplitMix64::new(seed ^ 0x0f00);
    let heat = loads(days, steps, 25.0, 35.0, &mut rng);
    let cold = loads(days, steps, 12.0, 18.0, &mut rng);

    let mut devices = Vec::new();
    let mut dh = blank_device("district heating", "DH");
    dh.depreciation_price = 4.0;
    dh.depreciation_carbon = 1.0;
    dh.district_heat_in = constant_series(days, steps, 1.0);
    dh.heat_out = constant_series(days, steps, 1.0);
    devices.push(dh);

    let mut cu = blank_device("cogeneration unit", "CU");
    cu.depreciation_price = 16.0;
    cu.depreciation_carbon = 5.0;
    cu.gas_in = jittered_series(days, steps, 1.4, 0.1, &mut rng);
    cu.heat_out = constant_series(days, steps, 1.0);
    cu.electricity_out = constant_series(days, steps, 0.35);
    devices.push(cu);

    let mut ac = blank_device("adsorption chiller", "AC");
    ac.depreciation_price = 8.0;
    ac.depreciation_carbon = 2.0;
    ac.district_heat_in = constant_series(days, steps, 1.3);
    ac.cold_out = constant_series(days, steps, 1.0);
    ac.adsorption_linked = true;
    devices.push(ac);

    // Reversible pair: heating side produces in the first half of the day,
    // cooling side in the second, sizes locked 1:1.
    let half = steps.div_ceil(2);
    let mut rev_heat = blank_device("reversible heat pump (heating)", "rev. AWHP");
    rev_heat.depreciation_price = 12.0;
    rev_heat.depreciation_carbon = 3.5;
    rev_heat.electricity_in = constant_series(days, steps, 0.3);
    rev_heat.heat_out = (0..days)
        .map(|_| (0..steps).map(|t| if t < half { 1.0 } else { 0.0 }).collect())
        .collect();
    devices.push(rev_heat);
    let mut rev_cool = blank_device("reversible heat pump (cooling)", "rev. BWHP");
    rev_cool.depreciation_price = 0.0;
    rev_cool.depreciation_carbon = 0.0;
    rev_cool.electricity_in = constant_series(days, steps, 0.28);
    rev_cool.cold_out = (0..days)
        .map(|_| (0..steps).map(|t| if t >= half { 1.0 } else { 0.0 }).collect())
        .collect();
    rev_cool.reversible_partner = Some(crate::model::ReversibleLink {
        partner: "rev. AWHP".into(),
        size_ratio: 1.0,
    });
    devices.push(rev_cool);

    let mut pv = blank_device("photovoltaic", "PV");
    pv.depreciation_price = 14.0;
    pv.depreciation_carbon = 6.0;
    pv.electricity_out = jittered_series(days, steps, 0.35, 0.2, &mut rng);
    pv.roof_area_per_unit = 2.975;
    devices.push(pv);

    let mut st = blank_device("solar thermal", "ST");
    st.depreciation_price = 9.0;
    st.depreciation_carbon = 2.0;
    st.heat_out = jittered_series(days, steps, 0.4, 0.25, &mut rng);
    st.roof_area_per_unit = 1.0;
    devices.push(st);

    let mut cc = blank_device("compression chiller", "CC");
    cc.depreciation_price = 9.0;
    cc.depreciation_carbon = 3.0;
    cc.electricity_in = constant_series(days, steps, 0.27);
    cc.cold_out = constant_series(days, steps, 1.0);
    devices.push(cc);

    finish_instance(steps, (heat, cold), devices, 90.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{has_errors, validate_instance};

    #[test]
    fn builders_validate_cleanly() {
        for instance in [
            gas_electric_toy(1, 1, 1, 1),
            gas_electric_toy(2, 2, 2, 2),
            gas_electric_toy(3, 1, 2, 3),
            benchmark_instance(3, 3, 4),
            rooftop_instance(2, 2, 5),
        ] {
            let diags = validate_instance(&instance, 0.0);
            assert!(
                !has_errors(&diags),
                "{:?}",
                diags.iter().map(|d| &d.message).collect::<Vec<_>>()
            );
        }
    }

    #[test]
    fn builders_are_deterministic() {
        let a = benchmark_instance(3, 3, 42);
        let b = benchmark_instance(3, 3, 42);
        assert_eq!(a, b);
        let c = benchmark_instance(3, 3, 43);
        assert_ne!(a, c);
    }

    #[test]
    fn dummy_sizing_rule() {
        let instance = gas_electric_toy(2, 1, 2, 9);
        let max_load = instance
            .days
            .iter()
            .flat_map(|d| d.heat_load.iter().zip(&d.cold_load).map(|(h, c)| h + c))
            .fold(0.0_f64, f64::max);
        assert!((instance.dummy.size - 10.0 * max_load).abs() < 1e-12);
        assert!((instance.dummy.marginal_cost - 1000.0 * 0.2074).abs() < 1e-12);
    }

    #[test]
    fn toy_touches_two_prices() {
        let instance = gas_electric_toy(2, 1, 2, 11);
        let sf = crate::model::build_standard_form(&instance).unwrap();
        // Only gas and electricity-buy rows carry coefficients (plus the
        // pinned dummy tariff).
        assert!(!sf.price_map.row(0).is_empty());
        assert!(!sf.price_map.row(1).is_empty());
        assert!(sf.price_map.row(2).is_empty());
        assert!(sf.price_map.row(3).is_empty());
        assert!(sf.price_map.row(4).is_empty());
        assert!(!sf.price_map.row(5).is_empty());
    }
}
