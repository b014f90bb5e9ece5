//! The building energy supply model: instance schema, objective
//! evaluators, and the compiler into the generic two-stage matrix form.
//!
//! An instance describes converters (heat pumps, boilers, chillers,
//! photovoltaic, ...), heat and cold storages, weighted representative days
//! with per-step loads, resource prices, and carbon factors. Annual cost and
//! carbon are linear in the design sizes and the per-step control levels.
//!
//! Time indexing: each day has `n` control steps `t = 1..=n` of `24/n`
//! hours, and `n + 2` storage snapshots `t = 0..=n+1`. The snapshots at
//! `t = 0` and `t = n+1` are pinned (heat storage full, cold storage
//! empty), and a carry row links `t = 0` to `t = 1`, so a day starts and
//! ends at the pinned fill levels.

mod compile;
mod eval;
mod validate;

#[cfg(test)]
pub(crate) mod tests;

pub use compile::{build_standard_form, LinkBlock, StandardFormProblem, VariableLayout};
pub use eval::{eval_co2, eval_costs, investment_carbon, investment_cost, Co2Split};
pub use validate::{has_errors, validate_instance, Diagnostic, Severity};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("index out of range: {0}")]
    IndexOutOfRange(String),
    #[error("invalid instance: {}", format_diagnostics(.0))]
    InvalidInstance(Vec<Diagnostic>),
}

fn format_diagnostics(diags: &[Diagnostic]) -> String {
    let errors: Vec<&Diagnostic> = diags
        .iter()
        .filter(|d| d.severity == Severity::Error)
        .collect();
    let shown: Vec<String> = errors.iter().take(3).map(|d| d.message.clone()).collect();
    format!("{} error(s): {}", errors.len(), shown.join("; "))
}

/// Resources with a market price, in the fixed order used everywhere:
/// gas, electricity bought, electricity sold, district heat, wood pellets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Resource {
    Gas,
    ElectricityBuy,
    ElectricitySell,
    DistrictHeat,
    Wood,
}

impl Resource {
    pub const ALL: [Resource; 5] = [
        Resource::Gas,
        Resource::ElectricityBuy,
        Resource::ElectricitySell,
        Resource::DistrictHeat,
        Resource::Wood,
    ];

    pub fn index(self) -> usize {
        match self {
            Resource::Gas => 0,
            Resource::ElectricityBuy => 1,
            Resource::ElectricitySell => 2,
            Resource::DistrictHeat => 3,
            Resource::Wood => 4,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Resource::Gas => "gas",
            Resource::ElectricityBuy => "electricity_buy",
            Resource::ElectricitySell => "electricity_sell",
            Resource::DistrictHeat => "district_heat",
            Resource::Wood => "wood",
        }
    }
}

/// Market prices in EUR/kWh.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriceVector {
    pub gas: f64,
    pub electricity_buy: f64,
    pub electricity_sell: f64,
    pub district_heat: f64,
    pub wood: f64,
}

impl PriceVector {
    pub const DIM: usize = 5;

    pub fn as_array(&self) -> [f64; 5] {
        [
            self.gas,
            self.electricity_buy,
            self.electricity_sell,
            self.district_heat,
            self.wood,
        ]
    }

    pub fn from_array(a: [f64; 5]) -> Self {
        Self {
            gas: a[0],
            electricity_buy: a[1],
            electricity_sell: a[2],
            district_heat: a[3],
            wood: a[4],
        }
    }

    pub fn get(&self, r: Resource) -> f64 {
        self.as_array()[r.index()]
    }
}

/// Carbon-equivalent emission factors in kg/kWh. The sell factor is a
/// credit: it enters operational carbon with a negative sign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CarbonFactors {
    pub gas: f64,
    pub electricity_buy: f64,
    pub electricity_sell: f64,
    pub district_heat: f64,
    pub wood: f64,
}

impl CarbonFactors {
    pub fn as_array(&self) -> [f64; 5] {
        [
            self.gas,
            self.electricity_buy,
            self.electricity_sell,
            self.district_heat,
            self.wood,
        ]
    }
}

/// The day grid: `steps_per_day` must divide 24 so that steps have an
/// exact length of `24 / steps_per_day` hours.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGrid {
    pub steps_per_day: usize,
}

impl TimeGrid {
    pub fn step_hours(&self) -> f64 {
        24.0 / self.steps_per_day as f64
    }
}

/// One weighted cluster day with per-step loads in kWh.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RepresentativeDay {
    pub id: String,
    /// Days per year represented by this cluster day.
    pub weight: f64,
    pub heat_load: Vec<f64>,
    pub cold_load: Vec<f64>,
}

/// Per-day, per-step coefficient series: `series[day][step]`. An empty
/// outer vector means all zeros.
pub type CoefSeries = Vec<Vec<f64>>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DummyKind {
    Heating,
    Cooling,
}

/// Fixed size ratio to a partner device (for reversible heat pumps modeled
/// as two coupled devices).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReversibleLink {
    /// Abbreviation of the partner device.
    pub partner: String,
    /// `size(self) = size_ratio * size(partner)`.
    pub size_ratio: f64,
}

/// A converter. All coefficient series are maximum consumptions/productions
/// per size unit per step, in kWh, indexed `[day][step]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceSpec {
    pub name: String,
    pub abbreviation: String,
    /// Size-proportional depreciation, EUR per size unit and year.
    #[serde(default)]
    pub depreciation_price: f64,
    /// Size-proportional embodied carbon, kg per size unit and year.
    #[serde(default)]
    pub depreciation_carbon: f64,
    /// Base depreciation cost/carbon: stored for completeness, but not part
    /// of any objective (only the size-proportional terms are).
    #[serde(default)]
    pub base_depreciation_price: f64,
    #[serde(default)]
    pub base_depreciation_carbon: f64,
    #[serde(default)]
    pub electricity_in: CoefSeries,
    #[serde(default)]
    pub electricity_out: CoefSeries,
    #[serde(default)]
    pub wood_in: CoefSeries,
    #[serde(default)]
    pub gas_in: CoefSeries,
    #[serde(default)]
    pub district_heat_in: CoefSeries,
    #[serde(default)]
    pub heat_out: CoefSeries,
    #[serde(default)]
    pub cold_out: CoefSeries,
    /// Maximum heat consumption; stored, used by no balance or objective.
    #[serde(default)]
    pub heat_in_limit: CoefSeries,
    #[serde(default)]
    pub dummy_kind: Option<DummyKind>,
    /// Roof area claimed per size unit (m^2); 0 for non-roof devices.
    #[serde(default)]
    pub roof_area_per_unit: f64,
    #[serde(default)]
    pub reversible_partner: Option<ReversibleLink>,
    /// Size bounded by district heating plus cogeneration sizes.
    #[serde(default)]
    pub adsorption_linked: bool,
}

impl DeviceSpec {
    pub fn is_dummy(&self) -> bool {
        self.dummy_kind.is_some()
    }

    /// Coefficient lookup with empty-series-means-zero semantics.
    pub fn coef(series: &CoefSeries, day: usize, step: usize) -> f64 {
        series
            .get(day)
            .and_then(|d| d.get(step))
            .copied()
            .unwrap_or(0.0)
    }
}

/// Storage parameters: annualized depreciation factors per kWh of capacity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StorageSpec {
    pub price: f64,
    pub carbon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Storages {
    pub heat: StorageSpec,
    pub cold: StorageSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Roof {
    pub total_area_m2: f64,
}

/// Backstop generator parameters: both dummies share the fixed size and the
/// marginal generation cost (EUR per kWh produced).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DummyConfig {
    pub size: f64,
    pub marginal_cost: f64,
}

/// A complete problem description. Serializes to/from the JSON instance
/// file with sections `grid`, `days`, `devices`, `storages`, `prices`,
/// `carbon`, `roof`, `dummy`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelInstance {
    pub grid: TimeGrid,
    pub days: Vec<RepresentativeDay>,
    pub devices: Vec<DeviceSpec>,
    pub storages: Storages,
    pub prices: PriceVector,
    pub carbon: CarbonFactors,
    pub roof: Roof,
    pub dummy: DummyConfig,
}

impl ModelInstance {
    pub fn from_json_str(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance serializes")
    }

    pub fn n_steps(&self) -> usize {
        self.grid.steps_per_day
    }

    pub fn n_days(&self) -> usize {
        self.days.len()
    }

    pub fn n_devices(&self) -> usize {
        self.devices.len()
    }

    pub fn device_index(&self, abbreviation: &str) -> Option<usize> {
        self.devices
            .iter()
            .position(|d| d.abbreviation == abbreviation)
    }

    /// The per-step price coefficient of a device: what one unit of control
    /// costs at prices `p`, combining all resource flows
    /// (`e*p_buy - el*p_sell + w*p_wood + g*p_gas + t*p_dh`).
    pub fn price_coeff(
        &self,
        device: usize,
        day: usize,
        step: usize,
        p: &PriceVector,
    ) -> Result<f64, ModelError> {
        let dev = self.check_indices(device, day, step)?;
        Ok(
            DeviceSpec::coef(&dev.electricity_in, day, step) * p.electricity_buy
                - DeviceSpec::coef(&dev.electricity_out, day, step) * p.electricity_sell
                + DeviceSpec::coef(&dev.wood_in, day, step) * p.wood
                + DeviceSpec::coef(&dev.gas_in, day, step) * p.gas
                + DeviceSpec::coef(&dev.district_heat_in, day, step) * p.district_heat,
        )
    }

    /// The analogous per-step carbon coefficient (kg per control unit).
    pub fn carbon_coeff(
        &self,
        device: usize,
        day: usize,
        step: usize,
    ) -> Result<f64, ModelError> {
        let dev = self.check_indices(device, day, step)?;
        let c = &self.carbon;
        Ok(
            DeviceSpec::coef(&dev.electricity_in, day, step) * c.electricity_buy
                - DeviceSpec::coef(&dev.electricity_out, day, step) * c.electricity_sell
                + DeviceSpec::coef(&dev.wood_in, day, step) * c.wood
                + DeviceSpec::coef(&dev.gas_in, day, step) * c.gas
                + DeviceSpec::coef(&dev.district_heat_in, day, step) * c.district_heat,
        )
    }

    /// Price-independent tariff coefficient charged per control unit of a
    /// dummy device (EUR); zero for real devices.
    pub fn dummy_tariff_coeff(&self, device: usize, day: usize, step: usize) -> f64 {
        let dev = &self.devices[device];
        if !dev.is_dummy() {
            return 0.0;
        }
        let produced = DeviceSpec::coef(&dev.heat_out, day, step)
            + DeviceSpec::coef(&dev.cold_out, day, step);
        self.dummy.marginal_cost * produced
    }

    fn check_indices(
        &self,
        device: usize,
        day: usize,
        step: usize,
    ) -> Result<&DeviceSpec, ModelError> {
        if day >= self.n_days() || step >= self.n_steps() {
            return Err(ModelError::IndexOutOfRange(format!(
                "day {day}, step {step} outside {} days x {} steps",
                self.n_days(),
                self.n_steps()
            )));
        }
        self.devices.get(device).ok_or_else(|| {
            ModelError::IndexOutOfRange(format!(
                "device {device} outside {}",
                self.n_devices()
            ))
        })
    }
}

/// First-stage decision: storage capacities and device sizes (aligned with
/// `ModelInstance::devices`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignVector {
    pub heat_storage_kwh: f64,
    pub cold_storage_kwh: f64,
    pub device_sizes: Vec<f64>,
}

/// Second-stage decision: per-step control levels and storage trajectories.
///
/// `device_controls[i][k][t-1]` is the control of device `i` on day `k` at
/// step `t in 1..=n`; the state vectors run over `t in 0..=n+1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlVector {
    pub device_controls: Vec<Vec<Vec<f64>>>,
    pub cold_states: Vec<Vec<f64>>,
    pub heat_states: Vec<Vec<f64>>,
}

impl ControlVector {
    /// All-zero controls of the right shape (storage states included).
    pub fn zeros(instance: &ModelInstance) -> Self {
        let n = instance.n_steps();
        let days = instance.n_days();
        Self {
            device_controls: vec![vec![vec![0.0; n]; days]; instance.n_devices()],
            cold_states: vec![vec![0.0; n + 2]; days],
            heat_states: vec![vec![0.0; n + 2]; days],
        }
    }
}
