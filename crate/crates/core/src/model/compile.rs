//! Compiler from a [`ModelInstance`] to the generic two-stage matrix form.
//!
//! The target shape is: first-stage cost `c`, linking rows
//! `B x + C y >= d`, second-stage cost `p . (A y)`, first-stage-only rows
//! `G x >= h`, and price-polyhedron rows supplied later by the uncertainty
//! set. Equality constraints of the model are split into `>=` pairs at this
//! boundary (the LP engine underneath handles equalities natively, but the
//! generic form is all `>=`).

use super::{ControlVector, DesignVector, DeviceSpec, ModelError, ModelInstance, PriceVector};
use crate::sparse::SparseMatrix;

/// Index bookkeeping for the compiled variable spaces.
#[derive(Debug, Clone)]
pub struct VariableLayout {
    pub n_devices: usize,
    pub n_days: usize,
    pub n_steps: usize,
    pub n_x: usize,
    pub n_y: usize,
    pub x_names: Vec<String>,
    pub y_names: Vec<String>,
}

impl VariableLayout {
    pub const HEAT_STORAGE: usize = 0;
    pub const COLD_STORAGE: usize = 1;

    pub fn device(&self, i: usize) -> usize {
        2 + i
    }

    /// Control of device `i` on day `k` at step `t` (`t` is 1-based).
    pub fn control(&self, i: usize, k: usize, t: usize) -> usize {
        debug_assert!((1..=self.n_steps).contains(&t));
        i * self.n_days * self.n_steps + k * self.n_steps + (t - 1)
    }

    /// Cold storage snapshot on day `k` at `t in 0..=n+1`.
    pub fn cold_state(&self, k: usize, t: usize) -> usize {
        debug_assert!(t <= self.n_steps + 1);
        self.controls_len() + k * (self.n_steps + 2) + t
    }

    /// Heat storage snapshot on day `k` at `t in 0..=n+1`.
    pub fn heat_state(&self, k: usize, t: usize) -> usize {
        self.controls_len() + self.n_days * (self.n_steps + 2) + k * (self.n_steps + 2) + t
    }

    pub fn controls_len(&self) -> usize {
        self.n_devices * self.n_days * self.n_steps
    }
}

/// Rows coupling first- and second-stage variables: `design*x + control*y >= rhs`.
#[derive(Debug, Clone)]
pub struct LinkBlock {
    pub design: SparseMatrix,
    pub control: SparseMatrix,
    pub rhs: Vec<f64>,
    pub names: Vec<String>,
}

impl LinkBlock {
    pub fn new(n_x: usize, n_y: usize) -> Self {
        Self {
            design: SparseMatrix::new(n_x),
            control: SparseMatrix::new(n_y),
            rhs: Vec::new(),
            names: Vec::new(),
        }
    }

    pub fn n_rows(&self) -> usize {
        self.rhs.len()
    }

    pub fn push(&mut self, name: String, x_terms: &[(usize, f64)], y_terms: &[(usize, f64)], rhs: f64) {
        self.design.push_row(x_terms);
        self.control.push_row(y_terms);
        self.rhs.push(rhs);
        self.names.push(name);
    }

    /// Pushes `lhs = rhs` as the two rows `lhs >= rhs` and `-lhs >= -rhs`.
    pub fn push_equality(
        &mut self,
        name: &str,
        x_terms: &[(usize, f64)],
        y_terms: &[(usize, f64)],
        rhs: f64,
    ) {
        self.push(format!("{name}+"), x_terms, y_terms, rhs);
        let neg_x: Vec<(usize, f64)> = x_terms.iter().map(|&(j, v)| (j, -v)).collect();
        let neg_y: Vec<(usize, f64)> = y_terms.iter().map(|&(j, v)| (j, -v)).collect();
        self.push(format!("{name}-"), &neg_x, &neg_y, -rhs);
    }

    /// Residual `B x + C y - d` per row.
    pub fn residual(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let bx = self.design.mul_vec(x);
        let cy = self.control.mul_vec(y);
        (0..self.n_rows()).map(|i| bx[i] + cy[i] - self.rhs[i]).collect()
    }
}

/// The compiled generic problem data for one instance.
#[derive(Debug, Clone)]
pub struct StandardFormProblem {
    pub layout: VariableLayout,
    /// First-stage cost `c` (one entry per x variable).
    pub first_stage_cost: Vec<f64>,
    /// Second-stage cost map `A`: price dimension x y dimension, entries
    /// `f * w_k * coefficient` so the operating cost is `p . (A y)`.
    pub price_map: SparseMatrix,
    /// Linking rows `B x + C y >= d`.
    pub link: LinkBlock,
    /// First-stage-only rows `G x >= h`.
    pub first_stage_lhs: SparseMatrix,
    pub first_stage_rhs: Vec<f64>,
    pub first_stage_names: Vec<String>,
    /// Total price-space dimension (market resources plus pinned
    /// pseudo-resources).
    pub n_prices: usize,
    pub price_names: Vec<String>,
    /// Pseudo-resource components pinned to a fixed value by the
    /// uncertainty polyhedron (index, value).
    pub pinned_prices: Vec<(usize, f64)>,
}

/// Price-space index of the dummy-generation tariff (pinned to 1).
pub const DUMMY_TARIFF: usize = PriceVector::DIM;

impl StandardFormProblem {
    pub fn n_x(&self) -> usize {
        self.layout.n_x
    }

    pub fn n_y(&self) -> usize {
        self.layout.n_y
    }

    /// Extends market prices with the pinned pseudo-resource components.
    pub fn full_price_vector(&self, p: &PriceVector) -> Vec<f64> {
        let mut full = p.as_array().to_vec();
        full.resize(self.n_prices, 0.0);
        for &(idx, v) in &self.pinned_prices {
            full[idx] = v;
        }
        full
    }

    pub fn pack_design(&self, d: &DesignVector) -> Vec<f64> {
        let mut x = vec![0.0; self.n_x()];
        x[VariableLayout::HEAT_STORAGE] = d.heat_storage_kwh;
        x[VariableLayout::COLD_STORAGE] = d.cold_storage_kwh;
        for (i, &s) in d.device_sizes.iter().enumerate() {
            x[self.layout.device(i)] = s;
        }
        x
    }

    pub fn unpack_design(&self, x: &[f64]) -> DesignVector {
        DesignVector {
            heat_storage_kwh: x[VariableLayout::HEAT_STORAGE],
            cold_storage_kwh: x[VariableLayout::COLD_STORAGE],
            device_sizes: (0..self.layout.n_devices)
                .map(|i| x[self.layout.device(i)])
                .collect(),
        }
    }

    pub fn pack_controls(&self, c: &ControlVector) -> Vec<f64> {
        let l = &self.layout;
        let mut y = vec![0.0; self.n_y()];
        for i in 0..l.n_devices {
            for k in 0..l.n_days {
                for t in 1..=l.n_steps {
                    y[l.control(i, k, t)] = c.device_controls[i][k][t - 1];
                }
            }
        }
        for k in 0..l.n_days {
            for t in 0..=l.n_steps + 1 {
                y[l.cold_state(k, t)] = c.cold_states[k][t];
                y[l.heat_state(k, t)] = c.heat_states[k][t];
            }
        }
        y
    }

    pub fn unpack_controls(&self, y: &[f64]) -> ControlVector {
        let l = &self.layout;
        ControlVector {
            device_controls: (0..l.n_devices)
                .map(|i| {
                    (0..l.n_days)
                        .map(|k| (1..=l.n_steps).map(|t| y[l.control(i, k, t)]).collect())
                        .collect()
                })
                .collect(),
            cold_states: (0..l.n_days)
                .map(|k| (0..=l.n_steps + 1).map(|t| y[l.cold_state(k, t)]).collect())
                .collect(),
            heat_states: (0..l.n_days)
                .map(|k| (0..=l.n_steps + 1).map(|t| y[l.heat_state(k, t)]).collect())
                .collect(),
        }
    }
}

/// Compiles an instance into the generic matrix form. Validation errors
/// abort the compilation.
pub fn build_standard_form(instance: &ModelInstance) -> Result<StandardFormProblem, ModelError> {
    let diags = super::validate_instance(instance, 0.0);
    if super::has_errors(&diags) {
        return Err(ModelError::InvalidInstance(diags));
    }

    let n = instance.n_steps();
    let days = instance.n_days();
    let n_dev = instance.n_devices();
    let f = instance.grid.step_hours();

    let mut x_names = vec!["d[HS]".to_string(), "d[CS]".to_string()];
    for dev in &instance.devices {
        x_names.push(format!("d[{}]", dev.abbreviation));
    }
    let mut y_names = Vec::new();
    for dev in &instance.devices {
        for k in 0..days {
            for t in 1..=n {
                y_names.push(format!("s[{},k{k},t{t}]", dev.abbreviation));
            }
        }
    }
    for k in 0..days {
        for t in 0..=n + 1 {
            y_names.push(format!("sc[k{k},t{t}]"));
        }
    }
    for k in 0..days {
        for t in 0..=n + 1 {
            y_names.push(format!("sh[k{k},t{t}]"));
        }
    }
    let layout = VariableLayout {
        n_devices: n_dev,
        n_days: days,
        n_steps: n,
        n_x: 2 + n_dev,
        n_y: y_names.len(),
        x_names,
        y_names,
    };

    // First-stage cost.
    let mut c = vec![0.0; layout.n_x];
    c[VariableLayout::HEAT_STORAGE] = f * instance.storages.heat.price;
    c[VariableLayout::COLD_STORAGE] = f * instance.storages.cold.price;
    for (i, dev) in instance.devices.iter().enumerate() {
        c[layout.device(i)] = if dev.is_dummy() { 0.0 } else { dev.depreciation_price };
    }

    // Second-stage price map: market rows for real devices, the pinned
    // tariff row for dummies.
    let price_names: Vec<String> = super::Resource::ALL
        .iter()
        .map(|r| r.label().to_string())
        .chain(std::iter::once("dummy_tariff".to_string()))
        .collect();
    let n_prices = price_names.len();
    let mut price_map = SparseMatrix::with_rows(n_prices, layout.n_y);
    for (i, dev) in instance.devices.iter().enumerate() {
        for (k, day) in instance.days.iter().enumerate() {
            let fw = f * day.weight;
            for t in 1..=n {
                let col = layout.control(i, k, t);
                if dev.is_dummy() {
                    price_map.set(DUMMY_TARIFF, col, fw * instance.dummy_tariff_coeff(i, k, t - 1));
                } else {
                    price_map.set(
                        super::Resource::Gas.index(),
                        col,
                        fw * DeviceSpec::coef(&dev.gas_in, k, t - 1),
                    );
                    price_map.set(
                        super::Resource::ElectricityBuy.index(),
                        col,
                        fw * DeviceSpec::coef(&dev.electricity_in, k, t - 1),
                    );
                    price_map.set(
                        super::Resource::ElectricitySell.index(),
                        col,
                        -fw * DeviceSpec::coef(&dev.electricity_out, k, t - 1),
                    );
                    price_map.set(
                        super::Resource::DistrictHeat.index(),
                        col,
                        fw * DeviceSpec::coef(&dev.district_heat_in, k, t - 1),
                    );
                    price_map.set(
                        super::Resource::Wood.index(),
                        col,
                        fw * DeviceSpec::coef(&dev.wood_in, k, t - 1),
                    );
                }
            }
        }
    }

    // Linking rows.
    let mut link = LinkBlock::new(layout.n_x, layout.n_y);
    for (k, day) in instance.days.iter().enumerate() {
        // Carry rows tie the pinned t=0 snapshot to the start of step 1.
        link.push_equality(
            &format!("cold_carry[k{k}]"),
            &[],
            &[(layout.cold_state(k, 0), 1.0), (layout.cold_state(k, 1), -1.0)],
            0.0,
        );
        link.push_equality(
            &format!("heat_carry[k{k}]"),
            &[],
            &[(layout.heat_state(k, 0), 1.0), (layout.heat_state(k, 1), -1.0)],
            0.0,
        );
        for t in 1..=n {
            let mut cold: Vec<(usize, f64)> = vec![
                (layout.cold_state(k, t), 1.0),
                (layout.cold_state(k, t + 1), -1.0),
            ];
            let mut heat: Vec<(usize, f64)> = vec![
                (layout.heat_state(k, t), 1.0),
                (layout.heat_state(k, t + 1), -1.0),
            ];
            for (i, dev) in instance.devices.iter().enumerate() {
                let col = layout.control(i, k, t);
                let c_out = DeviceSpec::coef(&dev.cold_out, k, t - 1);
                if c_out != 0.0 {
                    cold.push((col, c_out));
                }
                let h_net = DeviceSpec::coef(&dev.heat_out, k, t - 1)
                    - DeviceSpec::coef(&dev.district_heat_in, k, t - 1);
                if h_net != 0.0 {
                    heat.push((col, h_net));
                }
            }
            link.push_equality(&format!("cold_balance[k{k},t{t}]"), &[], &cold, day.cold_load[t - 1]);
            link.push_equality(&format!("heat_balance[k{k},t{t}]"), &[], &heat, day.heat_load[t - 1]);
        }
        // Technical limits: controls within sizes, snapshots within capacity.
        for (i, dev) in instance.devices.iter().enumerate() {
            for t in 1..=n {
                link.push(
                    format!("limit[{},k{k},t{t}]", dev.abbreviation),
                    &[(layout.device(i), 1.0)],
                    &[(layout.control(i, k, t), -1.0)],
                    0.0,
                );
            }
        }
        for t in 0..=n {
            link.push(
                format!("cap_cold[k{k},t{t}]"),
                &[(VariableLayout::COLD_STORAGE, 1.0)],
                &[(layout.cold_state(k, t), -1.0)],
                0.0,
            );
            link.push(
                format!("cap_heat[k{k},t{t}]"),
                &[(VariableLayout::HEAT_STORAGE, 1.0)],
                &[(layout.heat_state(k, t), -1.0)],
                0.0,
            );
        }
        // Boundary states: cold storage empty, heat storage full, at both
        // ends of the day.
        link.push_equality(
            &format!("cold_start[k{k}]"),
            &[],
            &[(layout.cold_state(k, 0), 1.0)],
            0.0,
        );
        link.push_equality(
            &format!("cold_end[k{k}]"),
            &[],
            &[(layout.cold_state(k, n + 1), 1.0)],
            0.0,
        );
        link.push_equality(
            &format!("heat_start[k{k}]"),
            &[(VariableLayout::HEAT_STORAGE, -1.0)],
            &[(layout.heat_state(k, 0), 1.0)],
            0.0,
        );
        link.push_equality(
            &format!("heat_end[k{k}]"),
            &[(VariableLayout::HEAT_STORAGE, -1.0)],
            &[(layout.heat_state(k, n + 1), 1.0)],
            0.0,
        );
    }

    // First-stage-only rows.
    let mut g = SparseMatrix::new(layout.n_x);
    let mut h = Vec::new();
    let mut g_names = Vec::new();
    let push_g = |g: &mut SparseMatrix,
                      h: &mut Vec<f64>,
                      g_names: &mut Vec<String>,
                      name: String,
                      terms: &[(usize, f64)],
                      rhs: f64| {
        g.push_row(terms);
        h.push(rhs);
        g_names.push(name);
    };

    let roof_terms: Vec<(usize, f64)> = instance
        .devices
        .iter()
        .enumerate()
        .filter(|(_, d)| d.roof_area_per_unit > 0.0)
        .map(|(i, d)| (layout.device(i), -d.roof_area_per_unit))
        .collect();
    if !roof_terms.is_empty() {
        push_g(
            &mut g,
            &mut h,
            &mut g_names,
            "roof_area".to_string(),
            &roof_terms,
            -instance.roof.total_area_m2,
        );
    }
    for (i, dev) in instance.devices.iter().enumerate() {
        if let Some(linkage) = &dev.reversible_partner {
            let j = instance
                .device_index(&linkage.partner)
                .expect("validated partner");
            for (suffix, sign) in [("+", 1.0), ("-", -1.0)] {
                push_g(
                    &mut g,
                    &mut h,
                    &mut g_names,
                    format!("reversible[{}]{suffix}", dev.abbreviation),
                    &[
                        (layout.device(i), sign),
                        (layout.device(j), -sign * linkage.size_ratio),
                    ],
                    0.0,
                );
            }
        }
        if dev.adsorption_linked {
            let mut terms = vec![(layout.device(i), -1.0)];
            for host in ["DH", "CU"] {
                if let Some(j) = instance.device_index(host) {
                    terms.push((layout.device(j), 1.0));
                }
            }
            push_g(
                &mut g,
                &mut h,
                &mut g_names,
                format!("adsorption_link[{}]", dev.abbreviation),
                &terms,
                0.0,
            );
        }
        if dev.is_dummy() {
            for (suffix, sign) in [("+", 1.0), ("-", -1.0)] {
                push_g(
                    &mut g,
                    &mut h,
                    &mut g_names,
                    format!("fix_dummy[{}]{suffix}", dev.abbreviation),
                    &[(layout.device(i), sign)],
                    sign * instance.dummy.size,
                );
            }
        }
    }
    for j in 0..layout.n_x {
        push_g(
            &mut g,
            &mut h,
            &mut g_names,
            format!("nonneg[{}]", layout.x_names[j]),
            &[(j, 1.0)],
            0.0,
        );
    }

    Ok(StandardFormProblem {
        layout,
        first_stage_cost: c,
        price_map,
        link,
        first_stage_lhs: g,
        first_stage_rhs: h,
        first_stage_names: g_names,
        n_prices,
        price_names,
        pinned_prices: vec![(DUMMY_TARIFF, 1.0)],
    })
}
