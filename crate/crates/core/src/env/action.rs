use std::fmt;

use crate::hydro::SystemInstance;

/// Discretization of the continuous flow decisions.
///
/// Turbine flow for reservoir `i` takes one of `qp_bins` evenly spaced
/// values on its turbine range; supply flow to area `j` in period `t` one
/// of `qs_bins` values on `[0, W_max[j][t] / Δt]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct ActionSpace {
    pub qp_bins: usize,
    pub qs_bins: usize,
}

impl Default for ActionSpace {
    fn default() -> Self {
        Self {
            qp_bins: 51,
            qs_bins: 51,
        }
    }
}

fn grid_value(lo: f64, hi: f64, bins: usize, k: usize) -> f64 {
    if k + 1 == bins {
        hi
    } else {
        lo + (hi - lo) * k as f64 / (bins - 1) as f64
    }
}

impl ActionSpace {
    pub fn new(qp_bins: usize, qs_bins: usize) -> Self {
        assert!(qp_bins >= 2 && qs_bins >= 2, "action grids need at least two bins");
        Self { qp_bins, qs_bins }
    }

    pub fn qp_value(&self, inst: &SystemInstance, reservoir: usize, k: usize) -> f64 {
        let (lo, hi) = inst.reservoirs[reservoir].turbine_flow_range;
        grid_value(lo, hi, self.qp_bins, k)
    }

    pub fn qs_value(&self, inst: &SystemInstance, area: usize, period: usize, k: usize) -> f64 {
        let hi = inst.areas[area].supply_max[period] / inst.period_seconds;
        grid_value(0.0, hi, self.qs_bins, k)
    }

    pub fn qp_grid(&self, inst: &SystemInstance, reservoir: usize) -> Vec<f64> {
        (0..self.qp_bins).map(|k| self.qp_value(inst, reservoir, k)).collect()
    }

    pub fn qs_grid(&self, inst: &SystemInstance, area: usize, period: usize) -> Vec<f64> {
        (0..self.qs_bins).map(|k| self.qs_value(inst, area, period, k)).collect()
    }

    pub fn arity(&self, kind: &StepKind) -> usize {
        match kind {
            StepKind::Power { .. } => self.qp_bins,
            StepKind::SupplyFlag { .. } => 2,
            StepKind::SupplyAmount { .. } => self.qs_bins,
        }
    }
}

/// Which decision a step makes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StepKind {
    Power { reservoir: usize, period: usize },
    SupplyFlag { reservoir: usize, area: usize, period: usize },
    SupplyAmount { reservoir: usize, area: usize, period: usize },
}

impl StepKind {
    pub fn reservoir(&self) -> usize {
        match *self {
            Self::Power { reservoir, .. }
            | Self::SupplyFlag { reservoir, .. }
            | Self::SupplyAmount { reservoir, .. } => reservoir,
        }
    }

    pub fn period(&self) -> usize {
        match *self {
            Self::Power { period, .. }
            | Self::SupplyFlag { period, .. }
            | Self::SupplyAmount { period, .. } => period,
        }
    }

    pub fn area(&self) -> Option<usize> {
        match *self {
            Self::Power { .. } => None,
            Self::SupplyFlag { area, .. } | Self::SupplyAmount { area, .. } => Some(area),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Self::Power { .. } => "power",
            Self::SupplyFlag { .. } => "supply_flag",
            Self::SupplyAmount { .. } => "supply_amount",
        }
    }
}

impl fmt::Display for StepKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Power { reservoir, period } => write!(f, "power(i={reservoir}, t={period})"),
            Self::SupplyFlag { reservoir, area, period } => {
                write!(f, "supply_flag(i={reservoir}, j={area}, t={period})")
            }
            Self::SupplyAmount { reservoir, area, period } => {
                write!(f, "supply_amount(i={reservoir}, j={area}, t={period})")
            }
        }
    }
}
