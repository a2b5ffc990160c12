use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{train_policy, train_subproblem, RewardFn, TrainConfig, TrainError, TrainOutcome};
use crate::decomposition::{ObjectiveBounds, WeightVector};
use crate::env::{greedy_rollout, ActionSpace, Episode, RewardMode};
use crate::hydro::{check_constraints, objective_triple, ObjectiveTriple, SystemInstance};
use crate::policy::{EncoderConfig, PolicyModel};
use crate::rng::derive_seed;

/// Outcome of one weight-vector subproblem of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubproblemResult {
    pub index: usize,
    pub weights: WeightVector,
    pub seed: u64,
    /// Objectives of the greedy decode, when it is feasible.
    pub objectives: Option<ObjectiveTriple>,
    pub feasible: bool,
    pub baseline_swaps: usize,
    pub diagnostic: Option<String>,
}

/// Greedy decode of `model` with its objectives and a feasibility
/// diagnostic.
pub fn greedy_decode(
    inst: &SystemInstance,
    space: &ActionSpace,
    model: &PolicyModel,
) -> Result<(Episode, ObjectiveTriple, Option<String>), TrainError> {
    let runner = model.runner(inst)?;
    let ep = greedy_rollout(inst, space, &runner)?;
    let report = check_constraints(inst, &ep.schedule);
    let obj = objective_triple(inst, &ep.schedule)?;
    let diagnostic = (!report.is_feasible()).then(|| {
        format!(
            "greedy decode violates {} constraints (first: {})",
            report.violations.len(),
            report.violations[0]
        )
    });
    Ok((ep, obj, diagnostic))
}

/// Trains one policy per weight vector in parallel and greedy-decodes each.
///
/// Subproblem `k` trains with seed `derive_seed(config.seed, k)`.
/// `on_trained` receives every successfully trained outcome (for example
/// to write its checkpoint); failures are recorded without stopping the
/// sweep.
pub fn train_sweep<F>(
    inst: &SystemInstance,
    space: &ActionSpace,
    encoder: EncoderConfig,
    bounds: &ObjectiveBounds,
    config: &TrainConfig,
    weights: &[WeightVector],
    on_trained: F,
) -> Vec<SubproblemResult>
where
    F: Fn(usize, &WeightVector, &TrainOutcome) + Sync,
{
    weights
        .par_iter()
        .enumerate()
        .map(|(index, &w)| {
            let seed = derive_seed(config.seed, index as u64);
            let cfg = TrainConfig {
                seed,
                ..config.clone()
            };
            let mut result = SubproblemResult {
                index,
                weights: w,
                seed,
                objectives: None,
                feasible: false,
                baseline_swaps: 0,
                diagnostic: None,
            };
            let outcome = match train_subproblem(inst, space, encoder, w, bounds, &cfg) {
                Ok(o) => o,
                Err(e) => {
                    result.diagnostic = Some(e.to_string());
                    return result;
                }
            };
            on_trained(index, &w, &outcome);
            result.baseline_swaps = outcome.swaps.len();
            match greedy_decode(inst, space, &outcome.model) {
                Ok((_, obj, None)) => {
                    result.objectives = Some(obj);
                    result.feasible = true;
                }
                Ok((_, _, Some(diag))) => result.diagnostic = Some(diag),
                Err(e) => result.diagnostic = Some(e.to_string()),
            }
            result
        })
        .collect()
}

/// Reward pushing one objective up or down, normalized by sampled bounds
/// without clamping so trained policies may leave the sampled range.
struct SingleObjective {
    objective: usize,
    maximize: bool,
    bounds: ObjectiveBounds,
    mode: RewardMode,
}

impl RewardFn for SingleObjective {
    fn reward(&self, inst: &SystemInstance, episode: &Episode) -> Result<f64, TrainError> {
        let obj = objective_triple(inst, &episode.schedule)?;
        let (v, r) = match self.objective {
            0 => (obj.power, &self.bounds.power),
            1 => (obj.aapfd, &self.bounds.aapfd),
            _ => (obj.water_revenue, &self.bounds.water),
        };
        let norm = (v - r.min) / (r.max - r.min);
        let value = if self.maximize { norm } else { 1.0 - norm };
        let report = check_constraints(inst, &episode.schedule);
        Ok(match (report.is_feasible(), self.mode) {
            (true, _) => value,
            (false, RewardMode::Hard) => 0.0,
            (false, RewardMode::SoftPenalty { lambda }) => value - lambda * report.total_violation(),
        })
    }
}

/// Greedy-decoded objective triples of six single-objective trainings
/// (maximize and minimize each objective), keeping feasible decodes only.
pub fn single_objective_extrema(
    inst: &SystemInstance,
    space: &ActionSpace,
    encoder: &EncoderConfig,
    config: &TrainConfig,
    sampled: &ObjectiveBounds,
) -> Result<Vec<ObjectiveTriple>, TrainError> {
    let runs: Vec<(usize, bool)> = (0..3).flat_map(|k| [(k, true), (k, false)]).collect();
    let found: Vec<Option<ObjectiveTriple>> = runs
        .par_iter()
        .enumerate()
        .map(|(n, &(objective, maximize))| {
            let reward = SingleObjective {
                objective,
                maximize,
                bounds: *sampled,
                mode: config.reward,
            };
            let cfg = TrainConfig {
                seed: derive_seed(config.seed, n as u64),
                ..config.clone()
            };
            let outcome = train_policy(inst, space, *encoder, &reward, &cfg)?;
            let (_, obj, diag) = greedy_decode(inst, space, &outcome.model)?;
            Ok(diag.is_none().then_some(obj))
        })
        .collect::<Result<_, TrainError>>()?;
    Ok(found.into_iter().flatten().collect())
}
