//! Carbon-cap scalarization: turning the bi-criteria problem (regret,
//! carbon) into a family of capped single-objective problems, plus the
//! sweep driver that traces trade-off fronts over `(alpha, cap)` grids.

use crate::lp::{LinearProgram, LpStatus, Relation};
use crate::model::{ModelInstance, StandardFormProblem, VariableLayout};
use crate::regret::{self, Algorithm, GenericRegretProblem, RegretConfig, RunStatus};
use crate::uncertainty::PriceBox;
use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScalarizeError {
    #[error("carbon cap must be positive, got {0}")]
    CapBelowFloor(f64),
    #[error("loads cannot be met by real devices: {0}")]
    Infeasible(String),
    #[error(transparent)]
    Model(#[from] crate::model::ModelError),
    #[error(transparent)]
    Regret(#[from] crate::regret::RegretError),
    #[error(transparent)]
    Lp(#[from] crate::lp::LpError),
    #[error(transparent)]
    Uncertainty(#[from] crate::uncertainty::UncertaintyError),
}

/// Which system the regret baseline may use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ComparatorMode {
    /// The comparator minimizes cost with no carbon restriction: regret
    /// answers "how much would ignoring the carbon limit have saved".
    Unconstrained,
    /// The comparator must respect the same carbon cap as the design.
    CarbonCapped,
}

impl ComparatorMode {
    pub fn label(self) -> &'static str {
        match self {
            ComparatorMode::Unconstrained => "unconstrained",
            ComparatorMode::CarbonCapped => "carbon-capped",
        }
    }
}

impl std::str::FromStr for ComparatorMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "unconstrained" => Ok(ComparatorMode::Unconstrained),
            "carbon-capped" => Ok(ComparatorMode::CarbonCapped),
            other => Err(format!("unknown comparator mode '{other}'")),
        }
    }
}

/// Annualized carbon coefficient vectors over the compiled variable spaces:
/// the investment part on `x`, the operational part (`f * w_k * q`) on `y`.
pub fn carbon_vectors(instance: &ModelInstance, layout: &VariableLayout) -> (Vec<f64>, Vec<f64>) {
    let f = instance.grid.step_hours();
    let mut on_x = vec![0.0; layout.n_x];
    on_x[VariableLayout::HEAT_STORAGE] = f * instance.storages.heat.carbon;
    on_x[VariableLayout::COLD_STORAGE] = f * instance.storages.cold.carbon;
    for (i, dev) in instance.devices.iter().enumerate() {
        if !dev.is_dummy() {
            on_x[layout.device(i)] = dev.depreciation_carbon;
        }
    }
    let mut on_y = vec![0.0; layout.n_y];
    for (i, dev) in instance.devices.iter().enumerate() {
        if dev.is_dummy() {
            continue;
        }
        for (k, day) in instance.days.iter().enumerate() {
            for t in 1..=layout.n_steps {
                on_y[layout.control(i, k, t)] = f
                    * day.weight
                    * instance
                        .carbon_coeff(i, k, t - 1)
                        .expect("indices in range");
            }
        }
    }
    (on_x, on_y)
}

/// Adds the carbon rows for cap `c` (kg/a): the combined
/// operational+investment row and the investment guard on the design
/// system always, and the same two rows on the comparator system in
/// [`ComparatorMode::CarbonCapped`]. Carbon coefficients are
/// price-independent, so the uncertainty polyhedron is untouched.
pub fn apply_carbon_cap(
    problem: &GenericRegretProblem,
    instance: &ModelInstance,
    cap_kg: f64,
    mode: ComparatorMode,
) -> Result<GenericRegretProblem, ScalarizeError> {
    // Dummies are carbon-free, so any positive cap keeps recourse alive;
    // only a nonpositive cap is structurally infeasible.
    if !(cap_kg > 0.0) {
        return Err(ScalarizeError::CapBelowFloor(cap_kg));
    }
    let (on_x, on_y) = carbon_vectors(instance, &problem.layout);
    let x_terms: Vec<(usize, f64)> = on_x
        .iter()
        .enumerate()
        .filter(|(_, v)| **v != 0.0)
        .map(|(j, v)| (j, -v))
        .collect();
    let y_terms: Vec<(usize, f64)> = on_y
        .iter()
        .enumerate()
        .filter(|(_, v)| **v != 0.0)
        .map(|(j, v)| (j, -v))
        .collect();

    // The linking row gets a whisker of slack beyond the first-stage
    // guard. Recourse rests on carbon-free backstops, which make the
    // combined row exactly as tight as the investment guard; a design that
    // saturates the guard to solver tolerance would otherwise leave the
    // second stage infeasible by that same tolerance. The margin must sit
    // comfortably above the guard row's own feasibility tolerance.
    let linking_cap = cap_kg + 1e-6 * (1.0 + cap_kg);
    let mut capped = problem.clone();
    capped
        .design_block
        .push("carbon_cap".into(), &x_terms, &y_terms, -linking_cap);
    capped.first_stage_lhs.push_row(&x_terms);
    capped.first_stage_rhs.push(-cap_kg);
    if mode == ComparatorMode::CarbonCapped {
        capped
            .comparator_block
            .push("carbon_cap*".into(), &x_terms, &y_terms, -linking_cap);
        capped
            .comparator_block
            .push("carbon_inv_cap*".into(), &x_terms, &[], -cap_kg);
    }
    Ok(capped)
}

/// The lowest annual carbon any real-device operation can reach: minimizes
/// total carbon over all model constraints with dummy controls forbidden.
pub fn min_carbon(instance: &ModelInstance) -> Result<f64, ScalarizeError> {
    let sf = crate::model::build_standard_form(instance)?;
    min_carbon_compiled(instance, &sf)
}

/// [`min_carbon`] over an already-compiled problem.
pub fn min_carbon_compiled(
    instance: &ModelInstance,
    sf: &StandardFormProblem,
) -> Result<f64, ScalarizeError> {
    let (on_x, on_y) = carbon_vectors(instance, &sf.layout);
    let mut lp = LinearProgram::minimize();
    for (j, c) in on_x.iter().enumerate() {
        lp.add_named_var(&sf.layout.x_names[j], *c, 0.0, f64::INFINITY);
    }
    let n_x = sf.n_x();
    for c in &on_y {
        lp.add_var(*c, 0.0, f64::INFINITY);
    }
    // Dummy usage is forbidden here: this is the floor real devices achieve.
    for (i, dev) in instance.devices.iter().enumerate() {
        if dev.is_dummy() {
            for k in 0..sf.layout.n_days {
                for t in 1..=sf.layout.n_steps {
                    lp.set_bounds(n_x + sf.layout.control(i, k, t), 0.0, 0.0);
                }
            }
        }
    }
    for i in 0..sf.link.n_rows() {
        let mut terms: Vec<(usize, f64)> = sf.link.design.row(i).to_vec();
        terms.extend(sf.link.control.row(i).iter().map(|&(j, v)| (n_x + j, v)));
        lp.add_row(Relation::Ge, sf.link.rhs[i], &terms);
    }
    for (i, row) in sf.first_stage_lhs.rows().enumerate() {
        lp.add_row(Relation::Ge, sf.first_stage_rhs[i], row);
    }
    let sol = lp.solve()?;
    match sol.status {
        LpStatus::Optimal => Ok(sol.objective_value),
        _ => Err(ScalarizeError::Infeasible(sol.witness.unwrap_or_default())),
    }
}

/// One `(alpha, cap)` cell of a sweep.
#[derive(Debug, Clone)]
pub struct TradeoffRecord {
    pub alpha: f64,
    pub cap_kg: f64,
    pub regret_lb: f64,
    pub regret_ub: f64,
    pub iterations: usize,
    pub wall_seconds: f64,
    pub status: String,
    pub algorithm: Algorithm,
    pub comparator: ComparatorMode,
    /// Sizes keyed by abbreviation (storages included as HS/CS).
    pub design: BTreeMap<String, f64>,
}

fn design_by_abbreviation(problem: &GenericRegretProblem, x: &[f64]) -> BTreeMap<String, f64> {
    problem
        .x_names
        .iter()
        .zip(x)
        .map(|(name, v)| {
            let abbr = name
                .strip_prefix("d[")
                .and_then(|s| s.strip_suffix(']'))
                .unwrap_or(name);
            (abbr.to_string(), *v)
        })
        .collect()
}

fn run_status_label(status: RunStatus) -> &'static str {
    match status {
        RunStatus::Converged => "converged",
        RunStatus::ConvergedByStall => "stall",
        RunStatus::IterationLimit => "iteration_limit",
    }
}

/// Solves one sweep cell; failures land in the record's status field.
pub fn solve_cell(
    instance: &ModelInstance,
    sf: &StandardFormProblem,
    alpha: f64,
    cap_kg: f64,
    algorithm: Algorithm,
    config: &RegretConfig,
    mode: ComparatorMode,
) -> TradeoffRecord {
    let started = std::time::Instant::now();
    let outcome = (|| -> Result<(regret::RegretCertificate, GenericRegretProblem), ScalarizeError> {
        let boxed = PriceBox::new(instance.prices.clone(), alpha)?;
        let base = GenericRegretProblem::assemble(sf, &boxed)?;
        let capped = apply_carbon_cap(&base, instance, cap_kg, mode)?;
        let cert = regret::run(&capped, algorithm, config)?;
        Ok((cert, capped))
    })();
    match outcome {
        Ok((cert, problem)) => TradeoffRecord {
            alpha,
            cap_kg,
            regret_lb: cert.lower_bound,
            regret_ub: cert.upper_bound,
            iterations: cert.iterations,
            wall_seconds: started.elapsed().as_secs_f64(),
            status: run_status_label(cert.status).to_string(),
            algorithm,
            comparator: mode,
            design: design_by_abbreviation(&problem, &cert.design),
        },
        Err(err) => TradeoffRecord {
            alpha,
            cap_kg,
            regret_lb: f64::NAN,
            regret_ub: f64::NAN,
            iterations: 0,
            wall_seconds: started.elapsed().as_secs_f64(),
            status: format!("error: {err}"),
            algorithm,
            comparator: mode,
            design: BTreeMap::new(),
        },
    }
}

/// Runs every `(alpha, cap)` cell. Cells are independent; `jobs > 1` fans
/// them out over threads and the records are assembled back in alpha-major,
/// cap-minor order, so results do not depend on scheduling. Per-cell
/// failures land in the record's status instead of aborting the sweep.
pub fn sweep(
    instance: &ModelInstance,
    alphas: &[f64],
    caps_kg: &[f64],
    algorithm: Algorithm,
    config: &RegretConfig,
    mode: ComparatorMode,
    jobs: usize,
) -> Result<Vec<TradeoffRecord>, ScalarizeError> {
    let sf = crate::model::build_standard_form(instance)?;
    let cells: Vec<(f64, f64)> = alphas
        .iter()
        .flat_map(|&a| caps_kg.iter().map(move |&c| (a, c)))
        .collect();
    let slots: Mutex<Vec<Option<TradeoffRecord>>> = Mutex::new(vec![None; cells.len()]);
    let next = AtomicUsize::new(0);
    let workers = jobs.max(1).min(cells.len().max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let idx = next.fetch_add(1, Ordering::Relaxed);
                if idx >= cells.len() {
                    break;
                }
                let (alpha, cap) = cells[idx];
                let record = solve_cell(instance, &sf, alpha, cap, algorithm, config, mode);
                slots.lock().expect("sweep worker poisoned")[idx] = Some(record);
            });
        }
    });
    Ok(slots
        .into_inner()
        .expect("sweep workers finished")
        .into_iter()
        .map(|r| r.expect("every cell solved"))
        .collect())
}

/// Device column order of the trade-off CSV (storages and dummies
/// included); abbreviations outside this list sort after it alphabetically.
pub const DEVICE_COLUMN_ORDER: [&str; 20] = [
    "AWHP", "AdC", "AC", "BWHP", "CU", "CS", "CC", "C-Dummy", "DH", "FC", "GB", "H-Dummy", "HS",
    "PB", "PV", "rev. AWHP", "rev. BWHP", "rev. WWHP", "ST", "WWHP",
];

fn column_rank(abbr: &str) -> (usize, &str) {
    match DEVICE_COLUMN_ORDER.iter().position(|a| *a == abbr) {
        Some(i) => (i, abbr),
        None => (DEVICE_COLUMN_ORDER.len(), abbr),
    }
}

/// Renders records into the front CSV:
/// `alpha,cap_kg,regret_lb,regret_ub,iterations,time_s,status` followed by
/// one column per device abbreviation.
pub fn front_csv(records: &[TradeoffRecord]) -> String {
    let mut columns: Vec<String> = records
        .iter()
        .flat_map(|r| r.design.keys().cloned())
        .collect();
    columns.sort_by(|a, b| column_rank(a).cmp(&column_rank(b)));
    columns.dedup();
    let mut out = String::from("alpha,cap_kg,regret_lb,regret_ub,iterations,time_s,status");
    for c in &columns {
        out.push(',');
        out.push_str(c);
    }
    out.push('\n');
    for r in records {
        out.push_str(&format!(
            "{},{},{:.4},{:.4},{},{:.3},{}",
            r.alpha, r.cap_kg, r.regret_lb, r.regret_ub, r.iterations, r.wall_seconds, r.status
        ));
        for c in &columns {
            match r.design.get(c) {
                Some(v) => out.push_str(&format!(",{v:.4}")),
                None => out.push(','),
            }
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::build_standard_form;
    use crate::model::tests::tiny_instance;
    use crate::regret::run;

    fn capped_problem(alpha: f64, cap: f64, mode: ComparatorMode) -> GenericRegretProblem {
        let instance = tiny_instance(2);
        let sf = build_standard_form(&instance).unwrap();
        let boxed = PriceBox::new(instance.prices.clone(), alpha).unwrap();
        let base = GenericRegretProblem::assemble(&sf, &boxed).unwrap();
        apply_carbon_cap(&base, &instance, cap, mode).unwrap()
    }

    #[test]
    fn nonpositive_cap_rejected() {
        let instance = tiny_instance(1);
        let sf = build_standard_form(&instance).unwrap();
        let boxed = PriceBox::new(instance.prices.clone(), 0.1).unwrap();
        let base = GenericRegretProblem::assemble(&sf, &boxed).unwrap();
        assert!(matches!(
            apply_carbon_cap(&base, &instance, 0.0, ComparatorMode::CarbonCapped),
            Err(ScalarizeError::CapBelowFloor(_))
        ));
        assert!(matches!(
            apply_carbon_cap(&base, &instance, -5.0, ComparatorMode::Unconstrained),
            Err(ScalarizeError::CapBelowFloor(_))
        ));
    }

    #[test]
    fn huge_cap_is_inactive() {
        let config = RegretConfig::with_epsilon(1.0);
        let instance = tiny_instance(2);
        let sf = build_standard_form(&instance).unwrap();
        let boxed = PriceBox::new(instance.prices.clone(), 0.3).unwrap();
        let base = GenericRegretProblem::assemble(&sf, &boxed).unwrap();
        let uncapped = run(&base, Algorithm::Ccg, &config).unwrap();
        let capped = capped_problem(0.3, 1e12, ComparatorMode::CarbonCapped);
        let capped_cert = run(&capped, Algorithm::Ccg, &config).unwrap();
        assert!(
            (uncapped.upper_bound - capped_cert.upper_bound).abs() <= 2.0 * config.epsilon,
            "{} vs {}",
            uncapped.upper_bound,
            capped_cert.upper_bound
        );
    }

    #[test]
    fn carbon_capped_zero_alpha_zero_regret() {
        let config = RegretConfig::with_epsilon(1.0);
        let capped = capped_problem(0.0, 5e4, ComparatorMode::CarbonCapped);
        let cert = run(&capped, Algorithm::Ccg, &config).unwrap();
        assert_eq!(cert.status, RunStatus::Converged);
        assert!(cert.iterations <= 2);
        assert!(cert.lower_bound.abs() <= 1e-4, "{}", cert.lower_bound);
        assert!(cert.upper_bound.abs() <= 1e-4, "{}", cert.upper_bound);
    }

    #[test]
    fn unconstrained_zero_alpha_equals_carbon_price_gap() {
        // At alpha = 0 the optimal regret against the unconstrained
        // comparator is the price of the carbon constraint at nominal
        // prices: capped minimum cost minus unrestricted minimum, obtained
        // here by two direct LP solves over the two comparator blocks.
        let instance = tiny_instance(2);
        let cap = 1.1 * min_carbon(&instance).unwrap();
        let config = RegretConfig::with_epsilon(1.0);
        let unconstrained = capped_problem(0.0, cap, ComparatorMode::Unconstrained);
        let cert = run(&unconstrained, Algorithm::Ccg, &config).unwrap();

        let both_capped = capped_problem(0.0, cap, ComparatorMode::CarbonCapped);
        let p = both_capped.bounds.nominal.clone();
        let capped_min = crate::regret::comparator_minimum(&both_capped, &p).unwrap().0;
        let free_min = crate::regret::comparator_minimum(&unconstrained, &p).unwrap().0;
        let gap = capped_min - free_min;
        assert!(gap >= -1e-6, "carbon cap cannot reduce cost");
        let mid = 0.5 * (cert.lower_bound + cert.upper_bound);
        assert!(
            (mid - gap).abs() <= 2.0 * config.epsilon,
            "regret {mid} vs direct gap {gap}"
        );
    }

    #[test]
    fn min_carbon_basics() {
        let instance = tiny_instance(2);
        let floor = min_carbon(&instance).unwrap();
        assert!(floor > 0.0);
        // Doubling loads cannot decrease the floor.
        let mut bigger = instance.clone();
        for day in &mut bigger.days {
            for v in day.heat_load.iter_mut().chain(day.cold_load.iter_mut()) {
                *v *= 2.0;
            }
        }
        let floor2 = min_carbon(&bigger).unwrap();
        assert!(floor2 >= floor - 1e-9, "{floor2} < {floor}");

        // With carbon-free operation only the investment floor remains, so
        // the value can only drop.
        let mut clean = instance.clone();
        clean.carbon.gas = 0.0;
        clean.carbon.electricity_buy = 0.0;
        let floor3 = min_carbon(&clean).unwrap();
        assert!(floor3 >= 0.0);
        assert!(floor3 <= floor + 1e-9);
    }

    #[test]
    fn min_carbon_infeasible_without_producers() {
        // Strip the only heat producer: loads cannot be met without the
        // (forbidden) dummies.
        let mut instance = tiny_instance(1);
        instance.devices[0].heat_out = vec![];
        let err = min_carbon(&instance);
        assert!(matches!(err, Err(ScalarizeError::Infeasible(_))), "{err:?}");
    }

    #[test]
    fn sweep_grid_shape_and_monotonicity() {
        let instance = tiny_instance(1);
        let floor = min_carbon(&instance).unwrap();
        let alphas = [0.25, 0.5];
        let caps = [1.05 * floor, 1.5 * floor, 3.0 * floor];
        let config = RegretConfig::with_epsilon(1.0);
        let records = sweep(
            &instance,
            &alphas,
            &caps,
            Algorithm::Ccg,
            &config,
            ComparatorMode::Unconstrained,
            1,
        )
        .unwrap();
        assert_eq!(records.len(), 6);
        // alpha-major, cap-minor order.
        assert_eq!(records[0].alpha, 0.25);
        assert_eq!(records[2].cap_kg, caps[2]);
        assert_eq!(records[3].alpha, 0.5);
        for r in &records {
            assert_eq!(r.status, "converged", "{}", r.status);
        }
        // Regret falls as the cap relaxes (per alpha) and rises with alpha
        // (per cap), both within the 2-epsilon slack.
        for a in 0..alphas.len() {
            for c in 1..caps.len() {
                let prev = &records[a * caps.len() + c - 1];
                let cur = &records[a * caps.len() + c];
                assert!(
                    cur.regret_ub <= prev.regret_ub + 2.0 * config.epsilon,
                    "cap monotonicity: {} -> {}",
                    prev.regret_ub,
                    cur.regret_ub
                );
            }
        }
        for c in 0..caps.len() {
            let low = &records[c];
            let high = &records[caps.len() + c];
            assert!(
                high.regret_lb >= low.regret_lb - 2.0 * config.epsilon,
                "alpha monotonicity: {} -> {}",
                low.regret_lb,
                high.regret_lb
            );
        }
    }

    #[test]
    fn sweep_is_schedule_independent() {
        let instance = tiny_instance(1);
        let alphas = [0.3];
        let caps = [3e4, 6e4];
        let config = RegretConfig::with_epsilon(1.0);
        let serial = sweep(
            &instance,
            &alphas,
            &caps,
            Algorithm::Ccg,
            &config,
            ComparatorMode::CarbonCapped,
            1,
        )
        .unwrap();
        let parallel = sweep(
            &instance,
            &alphas,
            &caps,
            Algorithm::Ccg,
            &config,
            ComparatorMode::CarbonCapped,
            4,
        )
        .unwrap();
        for (s, p) in serial.iter().zip(&parallel) {
            assert_eq!(s.regret_lb.to_bits(), p.regret_lb.to_bits());
            assert_eq!(s.regret_ub.to_bits(), p.regret_ub.to_bits());
            assert_eq!(s.iterations, p.iterations);
            assert_eq!(s.design, p.design);
        }
    }

    #[test]
    fn front_csv_layout() {
        let instance = tiny_instance(1);
        let config = RegretConfig::with_epsilon(1.0);
        let records = sweep(
            &instance,
            &[0.25],
            &[5e4],
            Algorithm::Ccg,
            &config,
            ComparatorMode::CarbonCapped,
            1,
        )
        .unwrap();
        let csv = front_csv(&records);
        let header = csv.lines().next().unwrap();
        assert!(header.starts_with("alpha,cap_kg,regret_lb,regret_ub,iterations,time_s,status"));
        // Table order puts CS before CC, GB before HS.
        let cs = header.find(",CS").unwrap();
        let cc = header.find(",CC").unwrap();
        let gb = header.find(",GB").unwrap();
        let hs = header.find(",HS").unwrap();
        assert!(cs < cc && gb < hs);
        assert_eq!(csv.lines().count(), 2);
    }
}
