//! Instance validation: hard invariant violations come back as errors,
//! numerically suspicious-but-legal configurations as warnings.

use super::{DeviceSpec, DummyKind, ModelInstance};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone)]
pub struct Diagnostic {
    pub severity: Severity,
    pub message: String,
}

pub fn has_errors(diags: &[Diagnostic]) -> bool {
    diags.iter().any(|d| d.severity == Severity::Error)
}

fn err(out: &mut Vec<Diagnostic>, message: String) {
    out.push(Diagnostic { severity: Severity::Error, message });
}

fn warn(out: &mut Vec<Diagnostic>, message: String) {
    out.push(Diagnostic { severity: Severity::Warning, message });
}

/// Checks an instance. `alpha` is the relative price-box half-width the
/// instance will be used with; it only affects arbitrage warnings (pass 0
/// when unknown).
pub fn validate_instance(instance: &ModelInstance, alpha: f64) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let n = instance.grid.steps_per_day;
    if n == 0 || 24 % n != 0 {
        err(&mut out, format!("steps_per_day {n} does not divide 24"));
        return out;
    }

    if instance.days.is_empty() {
        err(&mut out, "no representative days".into());
    }
    let mut weight_sum = 0.0;
    for (k, day) in instance.days.iter().enumerate() {
        if !(day.weight > 0.0) {
            err(&mut out, format!("day {k} ({}) has weight {}", day.id, day.weight));
        }
        weight_sum += day.weight;
        for (label, series) in [("heat_load", &day.heat_load), ("cold_load", &day.cold_load)] {
            if series.len() != n {
                err(
                    &mut out,
                    format!("day {k} ({}): {label} has {} entries, expected {n}", day.id, series.len()),
                );
            }
            if series.iter().any(|v| !v.is_finite() || *v < 0.0) {
                err(&mut out, format!("day {k} ({}): {label} has negative or non-finite entries", day.id));
            }
        }
    }
    if !instance.days.is_empty() && (weight_sum - 365.0).abs() > 1e-6 {
        err(&mut out, format!("day weights sum to {weight_sum}, expected 365"));
    }

    // Devices.
    let mut heating_dummies = 0;
    let mut cooling_dummies = 0;
    for (i, dev) in instance.devices.iter().enumerate() {
        if dev.abbreviation.is_empty() {
            err(&mut out, format!("device {i} has an empty abbreviation"));
        }
        if instance
            .devices
            .iter()
            .enumerate()
            .any(|(j, other)| j != i && other.abbreviation == dev.abbreviation)
        {
            err(&mut out, format!("abbreviation {} is not unique", dev.abbreviation));
        }
        for (label, series) in [
            ("electricity_in", &dev.electricity_in),
            ("electricity_out", &dev.electricity_out),
            ("wood_in", &dev.wood_in),
            ("gas_in", &dev.gas_in),
            ("district_heat_in", &dev.district_heat_in),
            ("heat_out", &dev.heat_out),
            ("cold_out", &dev.cold_out),
            ("heat_in_limit", &dev.heat_in_limit),
        ] {
            if series.is_empty() {
                continue; // all zeros
            }
            if series.len() != instance.days.len() || series.iter().any(|d| d.len() != n) {
                err(
                    &mut out,
                    format!(
                        "device {}: {label} is not {} days x {n} steps",
                        dev.abbreviation,
                        instance.days.len()
                    ),
                );
            } else if series.iter().flatten().any(|v| !v.is_finite() || *v < 0.0) {
                err(
                    &mut out,
                    format!("device {}: {label} has negative or non-finite entries", dev.abbreviation),
                );
            }
        }
        if !dev.depreciation_price.is_finite()
            || !dev.depreciation_carbon.is_finite()
            || dev.depreciation_price < 0.0
            || dev.depreciation_carbon < 0.0
        {
            err(&mut out, format!("device {}: negative or non-finite depreciation", dev.abbreviation));
        }
        match dev.dummy_kind {
            Some(DummyKind::Heating) => heating_dummies += 1,
            Some(DummyKind::Cooling) => cooling_dummies += 1,
            None => {}
        }
        if dev.is_dummy() {
            if dev.depreciation_price != 0.0 || dev.depreciation_carbon != 0.0 {
                err(
                    &mut out,
                    format!("dummy {} must have zero investment cost and carbon", dev.abbreviation),
                );
            }
            let consumes = [&dev.electricity_in, &dev.electricity_out, &dev.wood_in, &dev.gas_in, &dev.district_heat_in]
                .iter()
                .any(|s| s.iter().flatten().any(|v| *v != 0.0));
            if consumes {
                err(
                    &mut out,
                    format!("dummy {} must not consume or sell market resources", dev.abbreviation),
                );
            }
            // A dummy must be able to produce in every step, otherwise it
            // cannot guarantee recourse.
            let production = match dev.dummy_kind {
                Some(DummyKind::Heating) => &dev.heat_out,
                _ => &dev.cold_out,
            };
            for k in 0..instance.days.len() {
                for t in 0..n {
                    if DeviceSpec::coef(production, k, t) <= 0.0 {
                        err(
                            &mut out,
                            format!(
                                "dummy {} has no production at day {k}, step {}",
                                dev.abbreviation,
                                t + 1
                            ),
                        );
                    }
                }
            }
        }
        if let Some(link) = &dev.reversible_partner {
            match instance.device_index(&link.partner) {
                None => err(
                    &mut out,
                    format!("device {}: reversible partner {} not found", dev.abbreviation, link.partner),
                ),
                Some(j) if j == i => {
                    err(&mut out, format!("device {} is its own reversible partner", dev.abbreviation))
                }
                Some(j) => {
                    if !(link.size_ratio > 0.0) {
                        err(
                            &mut out,
                            format!("device {}: reversible size ratio must be positive", dev.abbreviation),
                        );
                    }
                    // At most one side of a reversible pair may produce in
                    // any step.
                    let partner = &instance.devices[j];
                    for k in 0..instance.days.len() {
                        for t in 0..n {
                            let own = DeviceSpec::coef(&dev.heat_out, k, t)
                                + DeviceSpec::coef(&dev.cold_out, k, t);
                            let other = DeviceSpec::coef(&partner.heat_out, k, t)
                                + DeviceSpec::coef(&partner.cold_out, k, t);
                            if own > 0.0 && other > 0.0 {
                                err(
                                    &mut out,
                                    format!(
                                        "reversible pair {}/{} both produce at day {k}, step {}",
                                        dev.abbreviation,
                                        partner.abbreviation,
                                        t + 1
                                    ),
                                );
                            }
                        }
                    }
                }
            }
        }
        if dev.adsorption_linked
            && instance.device_index("DH").is_none()
            && instance.device_index("CU").is_none()
        {
            warn(
                &mut out,
                format!(
                    "device {} is adsorption-linked but neither DH nor CU exists; its size is forced to 0",
                    dev.abbreviation
                ),
            );
        }
        if !dev.is_dummy() {
            let produces = dev
                .heat_out
                .iter()
                .chain(dev.cold_out.iter())
                .flatten()
                .any(|v| *v > 0.0);
            let sells = dev.electricity_out.iter().flatten().any(|v| *v > 0.0);
            if !produces && !sells {
                warn(&mut out, format!("device {} never produces anything", dev.abbreviation));
            }
        }
    }
    if heating_dummies != 1 {
        err(&mut out, format!("expected exactly one heating dummy, found {heating_dummies}"));
    }
    if cooling_dummies != 1 {
        err(&mut out, format!("expected exactly one cooling dummy, found {cooling_dummies}"));
    }

    // Scalars.
    for (label, v) in [
        ("heat storage price", instance.storages.heat.price),
        ("heat storage carbon", instance.storages.heat.carbon),
        ("cold storage price", instance.storages.cold.price),
        ("cold storage carbon", instance.storages.cold.carbon),
        ("roof area", instance.roof.total_area_m2),
    ] {
        if !v.is_finite() || v < 0.0 {
            err(&mut out, format!("{label} is negative or non-finite ({v})"));
        }
    }
    if instance.prices.as_array().iter().any(|p| !p.is_finite() || *p < 0.0) {
        err(&mut out, "nominal prices must be nonnegative and finite".into());
    }
    if instance.carbon.as_array().iter().any(|c| !c.is_finite()) {
        err(&mut out, "carbon factors must be finite".into());
    }
    if !(instance.dummy.size > 0.0) {
        err(&mut out, format!("dummy size must be positive, got {}", instance.dummy.size));
    }
    if !(instance.dummy.marginal_cost > 0.0) {
        err(&mut out, "dummy marginal cost must be positive".into());
    }

    // Arbitrage probe: a box corner where selling beats buying lets the
    // second stage earn unbounded profit through any buy+sell device.
    let sell_hi = instance.prices.electricity_sell * (1.0 + alpha);
    let buy_lo = instance.prices.electricity_buy * (1.0 - alpha);
    if sell_hi > buy_lo {
        warn(
            &mut out,
            format!(
                "electricity sell price can reach {sell_hi:.4} while the buy price can drop to \
                 {buy_lo:.4}; buy-and-sell arbitrage may unbound the recourse"
            ),
        );
    }

    // Recourse margin: the dummies should cover any single-step load alone.
    if heating_dummies == 1 && cooling_dummies == 1 {
        for (kind, label) in [(DummyKind::Heating, "heat"), (DummyKind::Cooling, "cold")] {
            let dummy = instance
                .devices
                .iter()
                .find(|d| d.dummy_kind == Some(kind))
                .expect("counted above");
            let production = match kind {
                DummyKind::Heating => &dummy.heat_out,
                DummyKind::Cooling => &dummy.cold_out,
            };
            for (k, day) in instance.days.iter().enumerate() {
                let loads = match kind {
                    DummyKind::Heating => &day.heat_load,
                    DummyKind::Cooling => &day.cold_load,
                };
                for t in 0..n.min(loads.len()) {
                    let cover = instance.dummy.size * DeviceSpec::coef(production, k, t);
                    if cover < loads[t] {
                        warn(
                            &mut out,
                            format!(
                                "{label} dummy covers only {cover} of load {} at day {k}, step {}",
                                loads[t],
                                t + 1
                            ),
                        );
                    }
                }
            }
        }
    }

    out
}
