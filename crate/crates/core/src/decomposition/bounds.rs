use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::{random_feasible_schedule, ActionSpace};
use crate::hydro::{objective_triple, ObjectiveTriple, SystemInstance};
use crate::policy::EncoderConfig;
use crate::rng::derive_seed;
use crate::trainer::{single_objective_extrema, TrainConfig};

/// Smallest AAPFD admitted before taking reciprocals.
pub const AAPFD_FLOOR: f64 = 1e-6;

/// Fraction of the observed range added on each side of sampled bounds.
const WIDENING: f64 = 0.05;

/// Attempts allowed per requested feasible sample.
const ATTEMPTS_PER_SAMPLE: usize = 50;

#[derive(Debug, Error)]
pub enum BoundsError {
    #[error("invalid weight vector: {0}")]
    InvalidWeights(String),
    #[error("invalid {objective} bounds: min {min} must be below max {max}")]
    Degenerate { objective: &'static str, min: f64, max: f64 },
    #[error("no feasible schedule found after {attempts} attempts")]
    NoFeasibleSchedule { attempts: usize },
    #[error("bound estimation budget must be at least 1")]
    EmptyBudget,
    #[error("single-objective training failed: {0}")]
    Training(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundSource {
    Sampled,
    Trained,
    UserSupplied,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveRange {
    pub min: f64,
    pub max: f64,
    pub source: BoundSource,
}

/// Normalization ranges of the three objectives, shared by all subproblems.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveBounds {
    pub power: ObjectiveRange,
    pub aapfd: ObjectiveRange,
    pub water: ObjectiveRange,
    /// Seed of the run that produced the bounds, if any.
    pub seed: Option<u64>,
}

impl ObjectiveBounds {
    /// Checks `min < max` for each objective and the AAPFD floor.
    pub fn new(
        power: ObjectiveRange,
        aapfd: ObjectiveRange,
        water: ObjectiveRange,
        seed: Option<u64>,
    ) -> Result<Self, BoundsError> {
        let b = Self {
            power,
            aapfd,
            water,
            seed,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<(), BoundsError> {
        for (objective, r) in [("power", &self.power), ("aapfd", &self.aapfd), ("water", &self.water)] {
            if !(r.min.is_finite() && r.max.is_finite() && r.min < r.max) {
                return Err(BoundsError::Degenerate {
                    objective,
                    min: r.min,
                    max: r.max,
                });
            }
        }
        if self.aapfd.min < AAPFD_FLOOR {
            return Err(BoundsError::Degenerate {
                objective: "aapfd",
                min: self.aapfd.min,
                max: self.aapfd.max,
            });
        }
        Ok(())
    }

    /// Bounds spanning the observed objective values, widened by 5 % of
    /// each range on both sides.
    pub fn from_observations(
        points: &[ObjectiveTriple],
        source: BoundSource,
        seed: Option<u64>,
    ) -> Result<Self, BoundsError> {
        let range = |f: &dyn Fn(&ObjectiveTriple) -> f64, floor: Option<f64>| {
            let lo = points.iter().map(f).fold(f64::INFINITY, f64::min);
            let hi = points.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
            let pad = WIDENING * (hi - lo);
            let (mut min, max) = if hi > lo { (lo - pad, hi + pad) } else { (lo, hi) };
            if let Some(floor) = floor {
                min = min.max(floor);
            }
            ObjectiveRange { min, max, source }
        };
        Self::new(
            range(&|o| o.power, None),
            range(&|o| o.aapfd, Some(AAPFD_FLOOR)),
            range(&|o| o.water_revenue, None),
            seed,
        )
    }
}

/// How to estimate the normalization bounds.
#[derive(Debug, Clone)]
pub enum BoundMethod {
    /// Extremes over `budget` random feasible schedules.
    Sample { budget: usize },
    /// Sampled bounds extended by the greedy decodes of six single-objective
    /// trainings (maximize and minimize each objective).
    Train {
        budget: usize,
        encoder: EncoderConfig,
        train: TrainConfig,
    },
}

/// Estimates [`ObjectiveBounds`] for an instance.
pub fn estimate_bounds<R: Rng + ?Sized>(
    inst: &SystemInstance,
    space: &ActionSpace,
    method: &BoundMethod,
    seed: u64,
    rng: &mut R,
) -> Result<ObjectiveBounds, BoundsError> {
    let budget = match method {
        BoundMethod::Sample { budget } | BoundMethod::Train { budget, .. } => *budget,
    };
    if budget == 0 {
        return Err(BoundsError::EmptyBudget);
    }
    let points = sample_objectives(inst, space, budget, rng)?;
    match method {
        BoundMethod::Sample { .. } => ObjectiveBounds::from_observations(&points, BoundSource::Sampled, Some(seed)),
        BoundMethod::Train { encoder, train, .. } => {
            let sampled = ObjectiveBounds::from_observations(&points, BoundSource::Sampled, Some(seed))?;
            let mut train = train.clone();
            train.seed = derive_seed(seed, 1);
            let extra = single_objective_extrema(inst, space, encoder, &train, &sampled)
                .map_err(|e| BoundsError::Training(e.to_string()))?;
            let mut all = points;
            all.extend(extra);
            ObjectiveBounds::from_observations(&all, BoundSource::Trained, Some(seed))
        }
    }
}

/// Objective values of up to `budget` random feasible schedules.
pub(crate) fn sample_objectives<R: Rng + ?Sized>(
    inst: &SystemInstance,
    space: &ActionSpace,
    budget: usize,
    rng: &mut R,
) -> Result<Vec<ObjectiveTriple>, BoundsError> {
    let mut points = Vec::with_capacity(budget);
    let mut attempts_left = budget * ATTEMPTS_PER_SAMPLE;
    while points.len() < budget && attempts_left > 0 {
        attempts_left -= 1;
        if let Some(s) = random_feasible_schedule(inst, space, rng, 1) {
            points.push(objective_triple(inst, &s).expect("validated instance"));
        }
    }
    if points.is_empty() {
        return Err(BoundsError::NoFeasibleSchedule {
            attempts: budget * ATTEMPTS_PER_SAMPLE,
        });
    }
    Ok(points)
}
