use std::io::Write;

use super::{ActionSpace, DecisionStep, EnvError, StepKind};
use crate::hydro::SystemInstance;

/// Writes one CSV row per decision:
/// `kind,reservoir,area,period,choice,value,log_prob`.
///
/// `value` is the chosen grid value (m³/s) for flow decisions and 0/1 for
/// supply flags. Indices are zero-based; `area` is empty for power steps.
pub fn write_trace<W: Write>(
    out: W,
    inst: &SystemInstance,
    space: &ActionSpace,
    steps: &[DecisionStep],
) -> Result<(), EnvError> {
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| EnvError::Trace(e.to_string());
    w.write_record(["kind", "reservoir", "area", "period", "choice", "value", "log_prob"])
        .map_err(err)?;
    for step in steps {
        let value = match step.kind {
            StepKind::Power { reservoir, .. } => space.qp_value(inst, reservoir, step.choice),
            StepKind::SupplyFlag { .. } => step.choice as f64,
            StepKind::SupplyAmount { area, period, .. } => space.qs_value(inst, area, period, step.choice),
        };
        let area = step.kind.area().map(|j| j.to_string()).unwrap_or_default();
        w.write_record([
            step.kind.label().to_string(),
            step.kind.reservoir().to_string(),
            area,
            step.kind.period().to_string(),
            step.choice.to_string(),
            value.to_string(),
            step.log_prob.to_string(),
        ])
        .map_err(err)?;
    }
    w.flush().map_err(|e| EnvError::Trace(e.to_string()))
}
