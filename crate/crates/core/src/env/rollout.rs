use rand::Rng;

use super::{ActionSpace, EnvError, StepKind};
use crate::hydro::{derive_trajectory, Decisions, OperationSchedule, SystemInstance};

/// State seen by the policy at one decision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    /// Current surface elevation of the deciding reservoir (m).
    pub elevation: f64,
    /// Water already delivered to the area this period by reservoirs
    /// decided earlier (m³). Zero for power steps.
    pub delivered: f64,
    /// Scaled inputs `[elevation, distance, delivered]`; power steps only
    /// use the first entry and leave the others at zero.
    pub features: [f64; 3],
}

/// One decision of an episode.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionStep {
    pub kind: StepKind,
    pub observation: Observation,
    pub choice: usize,
    pub log_prob: f64,
}

#[derive(Debug, Clone)]
pub struct Episode {
    pub schedule: OperationSchedule,
    pub steps: Vec<DecisionStep>,
    /// Sum of the step log-probabilities.
    pub log_prob: f64,
}

/// Probability oracle driving an episode.
///
/// Implementations must return a distribution of length
/// [`ActionSpace::arity`] for the given step, nonnegative and summing to one.
pub trait Policy: Sync {
    fn distribution(&self, kind: &StepKind, obs: &Observation) -> Vec<f64>;
}

/// Uniform distribution over every grid.
#[derive(Debug, Clone, Copy)]
pub struct UniformPolicy {
    pub space: ActionSpace,
}

impl Policy for UniformPolicy {
    fn distribution(&self, kind: &StepKind, _obs: &Observation) -> Vec<f64> {
        let n = self.space.arity(kind);
        vec![1.0 / n as f64; n]
    }
}

/// Min-max scaling of the dynamic observation inputs over one instance.
#[derive(Debug, Clone)]
pub struct FeatureScaler {
    elevation_lo: Vec<Vec<f64>>,
    elevation_span: Vec<Vec<f64>>,
    distance_lo: f64,
    distance_span: f64,
}

impl FeatureScaler {
    pub fn new(inst: &SystemInstance) -> Self {
        let mut elevation_lo = Vec::new();
        let mut elevation_span = Vec::new();
        for r in &inst.reservoirs {
            let (clo, chi) = r.curve.elevation_range();
            elevation_lo.push(r.elevation_min.clone());
            elevation_span.push(
                r.elevation_min
                    .iter()
                    .zip(&r.elevation_max)
                    .map(|(lo, hi)| if hi > lo { hi - lo } else { chi - clo })
                    .collect(),
            );
        }
        let distances: Vec<f64> = inst.areas.iter().flat_map(|a| a.distance.iter().copied()).collect();
        let lo = distances.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = distances.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let (distance_lo, distance_span) = if distances.is_empty() || hi <= lo {
            (if lo.is_finite() { lo } else { 0.0 }, 0.0)
        } else {
            (lo, hi - lo)
        };
        Self {
            elevation_lo,
            elevation_span,
            distance_lo,
            distance_span,
        }
    }

    /// Elevation mapped so that `[L_min, L_max]` of `(i, t)` becomes `[0, 1]`.
    pub fn elevation(&self, reservoir: usize, period: usize, elevation: f64) -> f64 {
        (elevation - self.elevation_lo[reservoir][period]) / self.elevation_span[reservoir][period]
    }

    pub fn distance(&self, d: f64) -> f64 {
        if self.distance_span > 0.0 {
            (d - self.distance_lo) / self.distance_span
        } else {
            0.0
        }
    }

    pub fn delivered(inst: &SystemInstance, area: usize, period: usize, delivered: f64) -> f64 {
        let cap = inst.areas[area].supply_max[period];
        if cap > 0.0 {
            delivered / cap
        } else {
            0.0
        }
    }
}

fn validate(space: &ActionSpace, kind: &StepKind, probs: &[f64]) -> Result<(), EnvError> {
    let expected = space.arity(kind);
    if probs.len() != expected {
        return Err(EnvError::WrongArity {
            step: kind.to_string(),
            expected,
            actual: probs.len(),
        });
    }
    if let Some(p) = probs.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
        return Err(EnvError::InvalidDistribution {
            step: kind.to_string(),
            reason: format!("entry {p} is negative or not finite"),
        });
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > 1e-6 {
        return Err(EnvError::InvalidDistribution {
            step: kind.to_string(),
            reason: format!("probabilities sum to {sum}"),
        });
    }
    Ok(())
}

fn sample_index<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let total: f64 = probs.iter().sum();
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    for (k, p) in probs.iter().enumerate() {
        acc += p;
        if acc > u {
            return k;
        }
    }
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

fn argmax_lowest(probs: &[f64]) -> usize {
    let mut best = 0;
    for (k, &p) in probs.iter().enumerate().skip(1) {
        if p > probs[best] {
            best = k;
        }
    }
    best
}

/// Runs one episode, sampling every action from the policy.
pub fn rollout<P, R>(
    inst: &SystemInstance,
    space: &ActionSpace,
    policy: &P,
    rng: &mut R,
) -> Result<Episode, EnvError>
where
    P: Policy + ?Sized,
    R: Rng + ?Sized,
{
    run(inst, space, policy, |p| sample_index(p, rng))
}

/// Runs one episode choosing the most probable action at every step;
/// ties go to the lowest index.
pub fn greedy_rollout<P>(inst: &SystemInstance, space: &ActionSpace, policy: &P) -> Result<Episode, EnvError>
where
    P: Policy + ?Sized,
{
    run(inst, space, policy, argmax_lowest)
}

fn run<P, F>(inst: &SystemInstance, space: &ActionSpace, policy: &P, mut choose: F) -> Result<Episode, EnvError>
where
    P: Policy + ?Sized,
    F: FnMut(&[f64]) -> usize,
{
    let (ni, nj, nt) = (inst.num_reservoirs(), inst.num_areas(), inst.horizon);
    let dt = inst.period_seconds;
    let scaler = FeatureScaler::new(inst);
    let mut decisions = Decisions::zeros(ni, nj, nt);
    let mut steps = Vec::with_capacity(nt * ni * (1 + 2 * nj));
    let mut storage: Vec<f64> = inst.reservoirs.iter().map(|r| r.initial_storage).collect();
    let mut delivered = vec![0.0; nj];
    let mut log_prob = 0.0;

    let mut decide = |kind: StepKind, observation: Observation, steps: &mut Vec<DecisionStep>| {
        let probs = policy.distribution(&kind, &observation);
        validate(space, &kind, &probs)?;
        let choice = choose(&probs);
        let lp = probs[choice].ln();
        log_prob += lp;
        steps.push(DecisionStep {
            kind,
            observation,
            choice,
            log_prob: lp,
        });
        Ok::<usize, EnvError>(choice)
    };

    for t in 0..nt {
        delivered.iter_mut().for_each(|w| *w = 0.0);
        for i in 0..ni {
            let res = &inst.reservoirs[i];
            let elevation = res.curve.elevation_clamped(storage[i]);
            let obs = Observation {
                elevation,
                delivered: 0.0,
                features: [scaler.elevation(i, t, elevation), 0.0, 0.0],
            };
            let k = decide(StepKind::Power { reservoir: i, period: t }, obs, &mut steps)?;
            let qp = space.qp_value(inst, i, k);
            decisions.qp[i][t] = qp;
            storage[i] += (res.inflow[t] - qp) * dt;

            for j in 0..nj {
                let elevation = res.curve.elevation_clamped(storage[i]);
                let obs = Observation {
                    elevation,
                    delivered: delivered[j],
                    features: [
                        scaler.elevation(i, t, elevation),
                        scaler.distance(inst.areas[j].distance[i]),
                        FeatureScaler::delivered(inst, j, t, delivered[j]),
                    ],
                };
                let flag = decide(StepKind::SupplyFlag { reservoir: i, area: j, period: t }, obs, &mut steps)?;
                if flag == 1 {
                    let k = decide(StepKind::SupplyAmount { reservoir: i, area: j, period: t }, obs, &mut steps)?;
                    let qs = space.qs_value(inst, j, t, k);
                    decisions.x[i][j][t] = true;
                    decisions.qs[i][j][t] = qs;
                    storage[i] -= qs * dt;
                    delivered[j] += qs * dt;
                }
            }
        }
    }

    let schedule = derive_trajectory(inst, decisions)?;
    Ok(Episode {
        schedule,
        steps,
        log_prob,
    })
}
