use super::*;
use crate::lp::{LinearProgram, LpStatus, Relation};
use crate::rng::SplitMix64;

fn series(days: usize, values: &[f64]) -> CoefSeries {
    vec![values.to_vec(); days]
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

pub(crate) fn table2_prices() -> PriceVector {
    PriceVector {
        gas: 0.0934,
        electricity_buy: 0.2074,
        electricity_sell: 0.2074,
        district_heat: 0.095,
        wood: 0.0817,
    }
}

/// One gas boiler, one electric chiller, both dummies; single day.
pub(crate) fn tiny_instance(n_steps: usize) -> ModelInstance {
    let n = n_steps;
    let step_loads_heat: Vec<f64> = (0..n).map(|t| 8.0 + 2.0 * t as f64).collect();
    let step_loads_cold: Vec<f64> = (0..n).map(|t| 3.0 + t as f64).collect();
    let mut gb = blank_device("gas boiler", "GB");
    gb.depreciation_price = 3.0;
    gb.depreciation_carbon = 1.0;
    gb.gas_in = series(1, &vec![2.0; n]);
    gb.heat_out = series(1, &vec![1.0; n]);
    let mut cc = blank_device("compression chiller", "CC");
    cc.depreciation_price = 5.0;
    cc.depreciation_carbon = 2.0;
    cc.electricity_in = series(1, &vec![0.5; n]);
    cc.cold_out = series(1, &vec![1.0; n]);
    let mut hd = blank_device("heating dummy", "H-Dummy");
    hd.dummy_kind = Some(DummyKind::Heating);
    hd.heat_out = series(1, &vec![1.0; n]);
    let mut cd = blank_device("cooling dummy", "C-Dummy");
    cd.dummy_kind = Some(DummyKind::Cooling);
    cd.cold_out = series(1, &vec![1.0; n]);
    ModelInstance {
        grid: TimeGrid { steps_per_day: n },
        days: vec![RepresentativeDay {
            id: "d0".into(),
            weight: 365.0,
            heat_load: step_loads_heat,
            cold_load: step_loads_cold,
        }],
        devices: vec![gb, cc, hd, cd],
        storages: Storages {
            heat: StorageSpec { price: 1.3, carbon: 0.2 },
            cold: StorageSpec { price: 1.1, carbon: 0.1 },
        },
        prices: table2_prices(),
        carbon: CarbonFactors {
            gas: 0.202,
            electricity_buy: 0.4,
            electricity_sell: 0.4,
            district_heat: 0.1,
            wood: 0.03,
        },
        roof: Roof { total_area_m2: 100.0 },
        dummy: DummyConfig { size: 200.0, marginal_cost: 207.4 },
    }
}

#[test]
fn price_coeff_gas_only() {
    let instance = tiny_instance(1);
    let gb = instance.device_index("GB").unwrap();
    // g = 2, nominal gas 0.0934.
    let c = instance.price_coeff(gb, 0, 0, &instance.prices).unwrap();
    assert!((c - 2.0 * 0.0934).abs() < 1e-12);
}

#[test]
fn price_coeff_zero_row() {
    let mut instance = tiny_instance(1);
    instance.devices[0].gas_in = vec![];
    let c = instance.price_coeff(0, 0, 0, &instance.prices).unwrap();
    assert_eq!(c, 0.0);
}

#[test]
fn price_coeff_buy_and_sell() {
    // e = 2, el = 1 at buy = sell = 0.2074 nets one unit of the price.
    let mut instance = tiny_instance(1);
    instance.devices[0].gas_in = vec![];
    instance.devices[0].electricity_in = series(1, &[2.0]);
    instance.devices[0].electricity_out = series(1, &[1.0]);
    let c = instance.price_coeff(0, 0, 0, &instance.prices).unwrap();
    assert!((c - 0.2074).abs() < 1e-12);
}

#[test]
fn price_coeff_index_errors() {
    let instance = tiny_instance(1);
    assert!(matches!(
        instance.price_coeff(99, 0, 0, &instance.prices),
        Err(ModelError::IndexOutOfRange(_))
    ));
    assert!(matches!(
        instance.price_coeff(0, 0, 5, &instance.prices),
        Err(ModelError::IndexOutOfRange(_))
    ));
}

#[test]
fn eval_costs_matches_hand_arithmetic() {
    // One control step at coefficient 0.1 plus a 100 EUR investment:
    // 24 * 365 * 0.1 + 100 = 976.
    let mut instance = tiny_instance(1);
    instance.prices.gas = 0.1;
    instance.devices[0].gas_in = series(1, &[1.0]);
    instance.devices[0].depreciation_price = 50.0;
    let mut design = DesignVector {
        heat_storage_kwh: 0.0,
        cold_storage_kwh: 0.0,
        device_sizes: vec![0.0; 4],
    };
    design.device_sizes[0] = 2.0; // p_inv = 2 * 50 = 100
    let mut controls = ControlVector::zeros(&instance);
    controls.device_controls[0][0][0] = 1.0;
    let cost = eval_costs(&instance, &design, &controls, &instance.prices).unwrap();
    assert!((cost - 976.0).abs() < 1e-9, "{cost}");
}

#[test]
fn eval_costs_empty_system_is_zero() {
    let instance = tiny_instance(2);
    let design = DesignVector {
        heat_storage_kwh: 0.0,
        cold_storage_kwh: 0.0,
        device_sizes: vec![0.0; 4],
    };
    let controls = ControlVector::zeros(&instance);
    let cost = eval_costs(&instance, &design, &controls, &instance.prices).unwrap();
    assert_eq!(cost, 0.0);
}

#[test]
fn eval_costs_investment_only() {
    let mut instance = tiny_instance(1);
    instance.devices[0].depreciation_price = 50.0;
    let design = DesignVector {
        heat_storage_kwh: 0.0,
        cold_storage_kwh: 0.0,
        device_sizes: vec![2.0, 0.0, 0.0, 0.0],
    };
    let controls = ControlVector::zeros(&instance);
    let cost = eval_costs(&instance, &design, &controls, &instance.prices).unwrap();
    assert!((cost - 100.0).abs() < 1e-12);
}

#[test]
fn eval_co2_splits() {
    let instance = tiny_instance(1);
    let zero_design = DesignVector {
        heat_storage_kwh: 0.0,
        cold_storage_kwh: 0.0,
        device_sizes: vec![0.0; 4],
    };
    let zeros = ControlVector::zeros(&instance);
    let split = eval_co2(&instance, &zero_design, &zeros).unwrap();
    assert_eq!((split.investment, split.operational, split.total), (0.0, 0.0, 0.0));

    // Investment only: one unit at 30 kg.
    let mut instance2 = tiny_instance(1);
    instance2.devices[0].depreciation_carbon = 30.0;
    let design = DesignVector {
        heat_storage_kwh: 0.0,
        cold_storage_kwh: 0.0,
        device_sizes: vec![1.0, 0.0, 0.0, 0.0],
    };
    let split = eval_co2(&instance2, &design, &zeros).unwrap();
    assert!((split.investment - 30.0).abs() < 1e-12);
    assert_eq!(split.operational, 0.0);
    assert!((split.total - 30.0).abs() < 1e-12);

    // Operational only: q = 0.2, s = 0.5 -> 24 * 365 * 0.5 * 0.2 = 876.
    let mut instance3 = tiny_instance(1);
    instance3.carbon.gas = 0.2;
    instance3.devices[0].gas_in = series(1, &[1.0]);
    let mut controls = ControlVector::zeros(&instance3);
    controls.device_controls[0][0][0] = 0.5;
    let split = eval_co2(&instance3, &zero_design, &controls).unwrap();
    assert!((split.operational - 876.0).abs() < 1e-9, "{}", split.operational);
    assert_eq!(split.total, split.investment + split.operational);
}

#[test]
fn standard_form_dimensions() {
    // 2 real devices + 2 dummies, 1 day, n = 1:
    // x = hs + cs + 4 devices; y = 4 controls + 2 * (n + 2) states.
    let instance = tiny_instance(1);
    let sf = build_standard_form(&instance).unwrap();
    assert_eq!(sf.n_x(), 6);
    assert_eq!(sf.n_y(), 4 + 2 * 3);
    assert_eq!(sf.layout.x_names.len(), sf.n_x());
    assert_eq!(sf.layout.y_names.len(), sf.n_y());
    assert_eq!(sf.n_prices, 6);
    assert_eq!(sf.pinned_prices, vec![(compile::DUMMY_TARIFF, 1.0)]);
}

#[test]
fn heat_balance_rhs_is_the_load() {
    let instance = tiny_instance(2);
    let sf = build_standard_form(&instance).unwrap();
    for t in 1..=2 {
        let name = format!("heat_balance[k0,t{t}]+");
        let row = sf.link.names.iter().position(|n| *n == name).unwrap();
        assert_eq!(sf.link.rhs[row], instance.days[0].heat_load[t - 1]);
        // And the split partner carries the negation.
        let neg = sf.link.names.iter().position(|n| *n == format!("heat_balance[k0,t{t}]-")).unwrap();
        assert_eq!(sf.link.rhs[neg], -instance.days[0].heat_load[t - 1]);
    }
}

/// Samples a feasible second stage for the given design by minimizing a
/// random positive objective over the linking rows.
pub(crate) fn sample_feasible_controls(
    sf: &StandardFormProblem,
    x: &[f64],
    rng: &mut SplitMix64,
) -> Vec<f64> {
    let mut lp = LinearProgram::minimize();
    for _ in 0..sf.n_y() {
        lp.add_var(rng.uniform(0.05, 1.0), 0.0, f64::INFINITY);
    }
    let bx = sf.link.design.mul_vec(x);
    for (i, row) in sf.link.control.rows().enumerate() {
        lp.add_row(Relation::Ge, sf.link.rhs[i] - bx[i], row);
    }
    let sol = lp.solve().unwrap();
    assert_eq!(sol.status, LpStatus::Optimal, "sampler must be feasible: {:?}", sol.witness);
    sol.primal
}

#[test]
fn compiler_matches_evaluators() {
    // The identity eval_costs = c.x + p.(A y) over random feasible points is
    // the faithfulness oracle for the compiler.
    let mut rng = SplitMix64::new(2024);
    for n in [1, 2] {
        let instance = tiny_instance(n);
        let sf = build_standard_form(&instance).unwrap();
        for _ in 0..50 {
            let mut design = DesignVector {
                heat_storage_kwh: rng.uniform(0.0, 20.0),
                cold_storage_kwh: rng.uniform(0.0, 20.0),
                device_sizes: vec![
                    rng.uniform(0.0, 30.0),
                    rng.uniform(0.0, 15.0),
                    instance.dummy.size,
                    instance.dummy.size,
                ],
            };
            design.device_sizes[2] = instance.dummy.size;
            let x = sf.pack_design(&design);
            let y = sample_feasible_controls(&sf, &x, &mut rng);
            let controls = sf.unpack_controls(&y);
            let p = PriceVector {
                gas: rng.uniform(0.0, 0.3),
                electricity_buy: rng.uniform(0.0, 0.4),
                electricity_sell: rng.uniform(0.0, 0.2),
                district_heat: rng.uniform(0.0, 0.3),
                wood: rng.uniform(0.0, 0.2),
            };
            let direct = eval_costs(&instance, &design, &controls, &p).unwrap();
            let full_p = sf.full_price_vector(&p);
            let ay = sf.price_map.mul_vec(&y);
            let matrix: f64 = sf
                .first_stage_cost
                .iter()
                .zip(&x)
                .map(|(c, v)| c * v)
                .sum::<f64>()
                + full_p.iter().zip(&ay).map(|(p, a)| p * a).sum::<f64>();
            let tol = 1e-9 * (1.0 + direct.abs());
            assert!(
                (direct - matrix).abs() <= tol,
                "evaluator {direct} vs matrix {matrix} (n={n})"
            );

            // Carbon total always splits exactly.
            let co2 = eval_co2(&instance, &design, &controls).unwrap();
            assert_eq!(co2.total, co2.investment + co2.operational);
        }
    }
}

#[test]
fn recourse_with_dummies_alone() {
    // All real sizes zero, dummies at M: the linking system must stay
    // feasible (that is the recourse guarantee the dummies exist for).
    let instance = tiny_instance(2);
    let sf = build_standard_form(&instance).unwrap();
    let design = DesignVector {
        heat_storage_kwh: 0.0,
        cold_storage_kwh: 0.0,
        device_sizes: vec![0.0, 0.0, instance.dummy.size, instance.dummy.size],
    };
    let x = sf.pack_design(&design);
    let mut rng = SplitMix64::new(5);
    let y = sample_feasible_controls(&sf, &x, &mut rng);
    let residual = sf.link.residual(&x, &y);
    assert!(residual.iter().all(|r| *r >= -1e-7));
}

#[test]
fn validate_flags_missing_cooling_dummy() {
    let mut instance = tiny_instance(1);
    instance.devices.retain(|d| d.dummy_kind != Some(DummyKind::Cooling));
    let diags = validate_instance(&instance, 0.0);
    assert!(diags
        .iter()
        .any(|d| d.severity == Severity::Error && d.message.contains("cooling dummy")));
}

#[test]
fn validate_clean_instance() {
    let diags = validate_instance(&tiny_instance(2), 0.0);
    assert!(
        !has_errors(&diags),
        "unexpected errors: {:?}",
        diags.iter().map(|d| &d.message).collect::<Vec<_>>()
    );
}

#[test]
fn validate_warns_on_arbitrage_corner() {
    // Sell nominal equals buy nominal; any positive alpha admits a corner
    // with sell above buy.
    let instance = tiny_instance(1);
    let diags = validate_instance(&instance, 0.25);
    assert!(diags
        .iter()
        .any(|d| d.severity == Severity::Warning && d.message.contains("arbitrage")));
    let diags0 = validate_instance(&instance, 0.0);
    assert!(!diags0.iter().any(|d| d.message.contains("arbitrage")));
}

#[test]
fn validate_rejects_bad_grid_and_weights() {
    let mut instance = tiny_instance(1);
    instance.grid.steps_per_day = 5;
    assert!(has_errors(&validate_instance(&instance, 0.0)));

    let mut instance = tiny_instance(1);
    instance.days[0].weight = 100.0;
    let diags = validate_instance(&instance, 0.0);
    assert!(diags.iter().any(|d| d.message.contains("weights sum")));
}

#[test]
fn instance_json_round_trip() {
    let instance = tiny_instance(2);
    let text = instance.to_json_pretty();
    let back = ModelInstance::from_json_str(&text).unwrap();
    assert_eq!(instance, back);
    for section in ["\"grid\"", "\"days\"", "\"devices\"", "\"storages\"", "\"prices\"", "\"carbon\"", "\"roof\"", "\"dummy\""] {
        assert!(text.contains(section), "missing section {section}");
    }
}

#[test]
fn build_rejects_invalid_instance() {
    let mut instance = tiny_instance(1);
    instance.days[0].heat_load = vec![1.0, 2.0, 3.0];
    assert!(matches!(
        build_standard_form(&instance),
        Err(ModelError::InvalidInstance(_))
    ));
}
