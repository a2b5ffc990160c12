//! Physical model of a multi-reservoir system.
//!
//! All functions here are pure: the same instance and decisions always
//! produce the same trajectory, objectives and feasibility report.

mod constraints;
mod curve;
mod formulas;
mod instance;
mod objectives;
mod trajectory;

pub use constraints::{check_constraints, ConstraintFamily, FeasibilityReport, Violation, BOUND_TOLERANCE};
pub use curve::{CurveRangeError, ElevationStorageCurve};
pub use formulas::{aapfd, power_generation, supply_revenue, water_balance_step};
pub use instance::{AreaSpec, ReservoirSpec, SystemInstance};
pub use objectives::{objective_triple, ObjectiveTriple};
pub use trajectory::{derive_trajectory, Decisions, OperationSchedule, TrajectoryIssue};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HydroError {
    #[error("invalid elevation-storage curve: {0}")]
    InvalidCurve(String),
    #[error("{0}")]
    CurveRange(#[from] CurveRangeError),
    #[error("ecological flow must be positive, got {value} at period {period}")]
    NonPositiveEcologicalFlow { period: usize, value: f64 },
    #[error("length mismatch in {what}: expected {expected}, got {actual}")]
    LengthMismatch {
        what: String,
        expected: usize,
        actual: usize,
    },
    #[error("invalid instance: {}", .0.join("; "))]
    InvalidInstance(Vec<String>),
}
