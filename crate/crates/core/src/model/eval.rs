//! Direct evaluators for annual cost and carbon.
//!
//! These walk the instance data independently of the matrix compiler; the
//! two routes are cross-checked against each other in tests, so neither may
//! be expressed through the other.

use super::{ControlVector, DesignVector, ModelError, ModelInstance};

/// Annual carbon split; `total` is computed as `investment + operational`
/// in exactly that order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Co2Split {
    pub investment: f64,
    pub operational: f64,
    pub total: f64,
}

/// Annualized investment cost: `f*d_hs*p_hs + f*d_cs*p_cs + sum(d_i p_i)`
/// over real devices (dummies carry no investment).
pub fn investment_cost(instance: &ModelInstance, design: &DesignVector) -> f64 {
    let f = instance.grid.step_hours();
    let mut total = f * design.heat_storage_kwh * instance.storages.heat.price
        + f * design.cold_storage_kwh * instance.storages.cold.price;
    for (i, dev) in instance.devices.iter().enumerate() {
        if !dev.is_dummy() {
            total += design.device_sizes[i] * dev.depreciation_price;
        }
    }
    total
}

/// Annualized embodied carbon, mirroring [`investment_cost`] with the
/// carbon factors.
pub fn investment_carbon(instance: &ModelInstance, design: &DesignVector) -> f64 {
    let f = instance.grid.step_hours();
    let mut total = f * design.heat_storage_kwh * instance.storages.heat.carbon
        + f * design.cold_storage_kwh * instance.storages.cold.carbon;
    for (i, dev) in instance.devices.iter().enumerate() {
        if !dev.is_dummy() {
            total += design.device_sizes[i] * dev.depreciation_carbon;
        }
    }
    total
}

fn check_shapes(instance: &ModelInstance, controls: &ControlVector) -> Result<(), ModelError> {
    let n = instance.n_steps();
    let days = instance.n_days();
    if controls.device_controls.len() != instance.n_devices() {
        return Err(ModelError::DimensionMismatch(format!(
            "{} control series for {} devices",
            controls.device_controls.len(),
            instance.n_devices()
        )));
    }
    for (i, per_day) in controls.device_controls.iter().enumerate() {
        if per_day.len() != days || per_day.iter().any(|d| d.len() != n) {
            return Err(ModelError::DimensionMismatch(format!(
                "controls of device {i} are not {days} days x {n} steps"
            )));
        }
    }
    for (label, states) in [("cold", &controls.cold_states), ("heat", &controls.heat_states)] {
        if states.len() != days || states.iter().any(|s| s.len() != n + 2) {
            return Err(ModelError::DimensionMismatch(format!(
                "{label} storage states are not {days} days x {} snapshots",
                n + 2
            )));
        }
    }
    Ok(())
}

fn check_design(instance: &ModelInstance, design: &DesignVector) -> Result<(), ModelError> {
    if design.device_sizes.len() != instance.n_devices() {
        return Err(ModelError::DimensionMismatch(format!(
            "{} sizes for {} devices",
            design.device_sizes.len(),
            instance.n_devices()
        )));
    }
    Ok(())
}

/// Annual cost at prices `p`:
/// `f * sum_k w_k * sum_{i,t} s_itk * (price coeff + dummy tariff)` plus
/// the investment term.
pub fn eval_costs(
    instance: &ModelInstance,
    design: &DesignVector,
    controls: &ControlVector,
    p: &super::PriceVector,
) -> Result<f64, ModelError> {
    check_design(instance, design)?;
    check_shapes(instance, controls)?;
    let f = instance.grid.step_hours();
    let n = instance.n_steps();
    let mut operating = 0.0;
    for (i, dev) in instance.devices.iter().enumerate() {
        for (k, day) in instance.days.iter().enumerate() {
            for t in 0..n {
                let s = controls.device_controls[i][k][t];
                if s == 0.0 {
                    continue;
                }
                let coeff = if dev.is_dummy() {
                    instance.dummy_tariff_coeff(i, k, t)
                } else {
                    instance.price_coeff(i, k, t, p)?
                };
                operating += f * day.weight * s * coeff;
            }
        }
    }
    Ok(operating + investment_cost(instance, design))
}

/// Annual carbon; dummies are carbon-free, the sell credit enters with a
/// negative sign through the per-step carbon coefficient.
pub fn eval_co2(
    instance: &ModelInstance,
    design: &DesignVector,
    controls: &ControlVector,
) -> Result<Co2Split, ModelError> {
    check_design(instance, design)?;
    check_shapes(instance, controls)?;
    let f = instance.grid.step_hours();
    let n = instance.n_steps();
    let mut operational = 0.0;
    for (i, dev) in instance.devices.iter().enumerate() {
        if dev.is_dummy() {
            continue;
        }
        for (k, day) in instance.days.iter().enumerate() {
            for t in 0..n {
                let s = controls.device_controls[i][k][t];
                if s == 0.0 {
                    continue;
                }
                operational += f * day.weight * s * instance.carbon_coeff(i, k, t)?;
            }
        }
    }
    let investment = investment_carbon(instance, design);
    Ok(Co2Split {
        investment,
        operational,
        total: investment + operational,
    })
}
