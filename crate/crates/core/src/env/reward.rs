use serde::{Deserialize, Serialize};

use crate::decomposition::{scalarize, ObjectiveBounds, WeightVector};
use crate::hydro::{check_constraints, objective_triple, HydroError, OperationSchedule, SystemInstance};

/// How infeasible episodes are rewarded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum RewardMode {
    /// Infeasible schedules earn exactly zero.
    #[default]
    Hard,
    /// Infeasible schedules earn the scalarized value minus
    /// `lambda · total normalized violation`.
    SoftPenalty { lambda: f64 },
}

/// Scalarized reward of a derived schedule under `weights`.
pub fn episode_reward(
    inst: &SystemInstance,
    sched: &OperationSchedule,
    weights: &WeightVector,
    bounds: &ObjectiveBounds,
    mode: RewardMode,
) -> Result<f64, HydroError> {
    let report = check_constraints(inst, sched);
    if report.is_feasible() {
        let obj = objective_triple(inst, sched)?;
        return Ok(scalarize(&obj, weights, bounds));
    }
    match mode {
        RewardMode::Hard => Ok(0.0),
        RewardMode::SoftPenalty { lambda } => {
            let obj = objective_triple(inst, sched)?;
            Ok(scalarize(&obj, weights, bounds) - lambda * report.total_violation())
        }
    }
}
