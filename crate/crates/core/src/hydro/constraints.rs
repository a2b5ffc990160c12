use std::fmt;

use super::{OperationSchedule, SystemInstance};

/// Absolute slack allowed on every bound comparison, in the bounded
/// quantity's own unit.
pub const BOUND_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ConstraintFamily {
    /// `L_min ≤ L ≤ L_max` per reservoir and period.
    Elevation,
    /// `P_min ≤ P ≤ P_max` per reservoir and period.
    Power,
    /// `W_min ≤ Σ_i qs·x·Δt ≤ W_max` per area and period.
    Supply,
    /// The trajectory starts from the specified storage.
    InitialStorage,
    /// Storage stays within the tabulated elevation–storage curve.
    CurveRange,
}

impl fmt::Display for ConstraintFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::Elevation => "elevation",
            Self::Power => "power",
            Self::Supply => "supply",
            Self::InitialStorage => "initial-storage",
            Self::CurveRange => "curve-range",
        };
        f.write_str(s)
    }
}

/// One violated bound. `entity` is a reservoir index, except for
/// [`ConstraintFamily::Supply`] where it is an area index.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub family: ConstraintFamily,
    pub entity: usize,
    pub period: Option<usize>,
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
    /// Positive normalizer used by [`Violation::normalized_excess`].
    pub scale: f64,
}

impl Violation {
    /// Distance from the feasible interval, in the quantity's unit.
    pub fn excess(&self) -> f64 {
        if self.value < self.lower {
            self.lower - self.value
        } else {
            (self.value - self.upper).max(0.0)
        }
    }

    pub fn normalized_excess(&self) -> f64 {
        self.excess() / self.scale
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} #{}", self.family, self.entity)?;
        if let Some(t) = self.period {
            write!(f, " t={t}")?;
        }
        write!(f, ": {} not in [{}, {}]", self.value, self.lower, self.upper)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FeasibilityReport {
    pub violations: Vec<Violation>,
}

impl FeasibilityReport {
    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn count(&self, family: ConstraintFamily) -> usize {
        self.violations.iter().filter(|v| v.family == family).count()
    }

    /// Sum of scale-normalized excesses; zero iff feasible.
    pub fn total_violation(&self) -> f64 {
        self.violations.iter().map(Violation::normalized_excess).sum()
    }
}

fn scale_of(lower: f64, upper: f64) -> f64 {
    let span = upper - lower;
    if span > 0.0 {
        span
    } else {
        upper.abs().max(lower.abs()).max(1.0)
    }
}

fn check(
    out: &mut Vec<Violation>,
    family: ConstraintFamily,
    entity: usize,
    period: Option<usize>,
    value: f64,
    lower: f64,
    upper: f64,
    scale: f64,
) {
    let ok = value >= lower - BOUND_TOLERANCE && value <= upper + BOUND_TOLERANCE;
    if !ok {
        out.push(Violation {
            family,
            entity,
            period,
            value,
            lower,
            upper,
            scale,
        });
    }
}

/// Checks elevation, power, aggregate supply, initial storage and curve
/// range constraints. Never fails; the report lists every violation.
pub fn check_constraints(inst: &SystemInstance, sched: &OperationSchedule) -> FeasibilityReport {
    use ConstraintFamily::*;
    let mut violations = Vec::new();
    let nt = inst.horizon;
    let dt = inst.period_seconds;

    for (i, res) in inst.reservoirs.iter().enumerate() {
        let (smin, smax) = res.curve.storage_range();
        let storage_scale = smax - smin;
        let v0 = sched.initial_storage.get(i).copied().unwrap_or(f64::NAN);
        check(
            &mut violations,
            InitialStorage,
            i,
            None,
            v0,
            res.initial_storage,
            res.initial_storage,
            storage_scale,
        );
        for t in 0..nt {
            check(
                &mut violations,
                CurveRange,
                i,
                Some(t),
                sched.storage[i][t],
                smin,
                smax,
                storage_scale,
            );
            let (lo, hi) = (res.elevation_min[t], res.elevation_max[t]);
            check(
                &mut violations,
                Elevation,
                i,
                Some(t),
                sched.elevation[i][t],
                lo,
                hi,
                scale_of(lo, hi),
            );
            let (lo, hi) = (res.power_min[t], res.power_max[t]);
            check(&mut violations, Power, i, Some(t), sched.power[i][t], lo, hi, scale_of(lo, hi));
        }
    }

    for (j, area) in inst.areas.iter().enumerate() {
        for t in 0..nt {
            let delivered: f64 = (0..inst.num_reservoirs())
                .filter(|&i| sched.decisions.x[i][j][t])
                .map(|i| sched.decisions.qs[i][j][t] * dt)
                .sum();
            let (lo, hi) = (area.supply_min[t], area.supply_max[t]);
            check(&mut violations, Supply, j, Some(t), delivered, lo, hi, scale_of(lo, hi));
        }
    }

    FeasibilityReport { violations }
}
