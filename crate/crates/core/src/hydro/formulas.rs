use super::HydroError;

/// Energy produced in one period: `A · Qp · H · Δt`.
pub fn power_generation(coefficient: f64, turbine_flow: f64, head: f64, period_seconds: f64) -> f64 {
    coefficient * turbine_flow * head * period_seconds
}

/// Amended annual proportional flow deviation of one reservoir.
///
/// `sqrt(Σ_t ((qp_t − qe_t) / qe_t)²)`; zero exactly when the turbine flow
/// matches the ecological flow in every period.
pub fn aapfd(turbine_flow: &[f64], ecological_flow: &[f64]) -> Result<f64, HydroError> {
    if turbine_flow.len() != ecological_flow.len() {
        return Err(HydroError::LengthMismatch {
            what: "aapfd flows".into(),
            expected: ecological_flow.len(),
            actual: turbine_flow.len(),
        });
    }
    let mut acc = 0.0;
    for (t, (&qp, &qe)) in turbine_flow.iter().zip(ecological_flow).enumerate() {
        if !(qe > 0.0) {
            return Err(HydroError::NonPositiveEcologicalFlow { period: t, value: qe });
        }
        let r = (qp - qe) / qe;
        acc += r * r;
    }
    Ok(acc.sqrt())
}

/// Revenue of one reservoir-to-area delivery in one period:
/// `(b·qs − c·l·qs) · x · Δt`. Negative when transport cost exceeds benefit.
pub fn supply_revenue(
    unit_benefit: f64,
    unit_cost: f64,
    distance: f64,
    supply_flow: f64,
    delivered: bool,
    period_seconds: f64,
) -> f64 {
    let x = if delivered { 1.0 } else { 0.0 };
    (unit_benefit * supply_flow - unit_cost * distance * supply_flow) * x * period_seconds
}

/// Storage at the end of a period given the previous storage and flows.
/// May go negative; callers flag that as infeasible.
pub fn water_balance_step(
    prev_storage: f64,
    inflow: f64,
    turbine_flow: f64,
    supply_flow_sum: f64,
    period_seconds: f64,
) -> f64 {
    prev_storage + (inflow - turbine_flow - supply_flow_sum) * period_seconds
}
