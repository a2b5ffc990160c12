use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{paired_t_test, TTest, TrainConfig, TrainError};
use crate::decomposition::{ObjectiveBounds, WeightVector};
use crate::env::{episode_reward, greedy_rollout, rollout, ActionSpace, Episode, RewardMode};
use crate::hydro::SystemInstance;
use crate::policy::{EncoderConfig, PolicyModel};
use crate::rng::{derive_seed, rng_from_seed};
use crate::tensor::{Adam, Gradients, Graph};

/// Consecutive all-zero-reward iterations after which a warning is issued.
pub const ZERO_REWARD_WARNING_STREAK: usize = 50;

/// Episodes whose log-probabilities share one graph in the backward pass.
const GRAPH_CHUNK: usize = 8;

/// Scores a finished episode.
pub trait RewardFn: Sync {
    fn reward(&self, inst: &SystemInstance, episode: &Episode) -> Result<f64, TrainError>;
}

/// Scalarized reward of one weight-vector subproblem.
#[derive(Debug, Clone, Copy)]
pub struct ScalarizedReward {
    pub weights: WeightVector,
    pub bounds: ObjectiveBounds,
    pub mode: RewardMode,
}

impl RewardFn for ScalarizedReward {
    fn reward(&self, inst: &SystemInstance, episode: &Episode) -> Result<f64, TrainError> {
        Ok(episode_reward(inst, &episode.schedule, &self.weights, &self.bounds, self.mode)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub iteration: usize,
    pub epoch: usize,
    pub mean_reward: f64,
    pub baseline_reward: f64,
    pub lr: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: PolicyModel,
    pub curve: Vec<CurvePoint>,
    /// Epoch-end tests, one per epoch.
    pub ttests: Vec<TTest>,
    /// Epochs (0-based) after which the baseline was replaced.
    pub swaps: Vec<usize>,
    pub warnings: Vec<String>,
}

fn sample_batch(
    inst: &SystemInstance,
    space: &ActionSpace,
    model: &PolicyModel,
    n: usize,
    seed: u64,
) -> Result<Vec<Episode>, TrainError> {
    let runner = model.runner(inst)?;
    (0..n)
        .into_par_iter()
        .map(|b| {
            let mut rng = rng_from_seed(derive_seed(seed, b as u64));
            Ok(rollout(inst, space, &runner, &mut rng)?)
        })
        .collect()
}

fn score(inst: &SystemInstance, reward: &dyn RewardFn, episodes: &[Episode]) -> Result<Vec<f64>, TrainError> {
    episodes.par_iter().map(|e| reward.reward(inst, e)).collect()
}

fn greedy_reward(
    inst: &SystemInstance,
    space: &ActionSpace,
    model: &PolicyModel,
    reward: &dyn RewardFn,
) -> Result<f64, TrainError> {
    let runner = model.runner(inst)?;
    let ep = greedy_rollout(inst, space, &runner)?;
    reward.reward(inst, &ep)
}

/// Loss `−(1/B)·Σ_b adv_b·Σ log p` and its parameter gradient.
pub fn reinforce_gradient(
    model: &PolicyModel,
    inst: &SystemInstance,
    episodes: &[Episode],
    advantages: &[f64],
) -> Result<(f64, Gradients), TrainError> {
    assert_eq!(episodes.len(), advantages.len(), "one advantage per episode");
    let b = episodes.len().max(1) as f64;
    let items: Vec<(&[_], f64)> = episodes
        .iter()
        .zip(advantages)
        .map(|(e, a)| (e.steps.as_slice(), -a / b))
        .collect();
    let parts: Vec<(f64, Gradients)> = items
        .par_chunks(GRAPH_CHUNK)
        .map(|chunk| {
            let mut g = Graph::new(model.params());
            let loss = model.weighted_log_prob(&mut g, inst, chunk)?;
            let mut grads = Gradients::zeros_like(model.params());
            g.backward(loss, &mut grads).map_err(crate::policy::PolicyError::from)?;
            Ok((g.value(loss).item(), grads))
        })
        .collect::<Result<_, TrainError>>()?;
    let mut grads = Gradients::zeros_like(model.params());
    let mut loss = 0.0;
    for (l, g) in &parts {
        loss += l;
        grads.add(g);
    }
    Ok((loss, grads))
}

/// Trains a fresh policy against an arbitrary reward.
pub fn train_policy(
    inst: &SystemInstance,
    space: &ActionSpace,
    encoder: EncoderConfig,
    reward: &dyn RewardFn,
    config: &TrainConfig,
) -> Result<TrainOutcome, TrainError> {
    config.validate()?;
    let mut model = PolicyModel::new(encoder, *space, derive_seed(config.seed, 0))?;
    let mut baseline = model.clone();
    let mut last_good = model.clone();
    let mut adam = Adam::new(model.params());
    let mut baseline_reward = greedy_reward(inst, space, &baseline, reward)?;
    let iter_seeds = derive_seed(config.seed, 1);
    let eval_seeds = derive_seed(config.seed, 2);

    let mut curve = Vec::with_capacity(config.epochs * config.iterations_per_epoch);
    let mut ttests = Vec::with_capacity(config.epochs);
    let mut swaps = Vec::new();
    let mut warnings = Vec::new();
    let mut zero_streak = 0;

    for epoch in 0..config.epochs {
        let lr = config.lr(epoch);
        for it in 0..config.iterations_per_epoch {
            let iteration = epoch * config.iterations_per_epoch + it;
            let episodes = sample_batch(inst, space, &model, config.batch_size, derive_seed(iter_seeds, iteration as u64))?;
            let rewards = score(inst, reward, &episodes)?;
            let advantages: Vec<f64> = rewards.iter().map(|r| r - baseline_reward).collect();
            let (loss, grads) = reinforce_gradient(&model, inst, &episodes, &advantages)?;
            let diverged = |detail: String| TrainError::Diverged {
                iteration,
                detail,
                last_good: Box::new(last_good.clone()),
            };
            if !loss.is_finite() || !grads.all_finite() {
                return Err(diverged(format!("loss {loss}, gradient norm {}", grads.l2_norm())));
            }
            adam.step(model.params_mut(), &grads, lr);
            if !model.params().all_finite() {
                return Err(diverged("non-finite parameters after optimizer step".into()));
            }
            last_good.params_mut().copy_values_from(model.params());

            if rewards.iter().all(|&r| r == 0.0) {
                zero_streak += 1;
                if zero_streak == ZERO_REWARD_WARNING_STREAK {
                    warnings.push(format!(
                        "{ZERO_REWARD_WARNING_STREAK} consecutive iterations ending at {iteration} had only \
                         zero-reward (infeasible) episodes; consider the soft_penalty reward mode"
                    ));
                }
            } else {
                zero_streak = 0;
            }
            curve.push(CurvePoint {
                iteration,
                epoch,
                mean_reward: rewards.iter().sum::<f64>() / rewards.len() as f64,
                baseline_reward,
                lr,
            });
        }

        // Learner and baseline are compared on paired episodes that share
        // their random streams.
        let seed = derive_seed(eval_seeds, epoch as u64);
        let learner = score(inst, reward, &sample_batch(inst, space, &model, config.eval_batch, seed)?)?;
        let base = score(inst, reward, &sample_batch(inst, space, &baseline, config.eval_batch, seed)?)?;
        let test = paired_t_test(&learner, &base, config.ttest_alpha)?;
        ttests.push(test);
        if test.significant {
            baseline.params_mut().copy_values_from(model.params());
            baseline_reward = greedy_reward(inst, space, &baseline, reward)?;
            swaps.push(epoch);
        }
    }
    Ok(TrainOutcome {
        model,
        curve,
        ttests,
        swaps,
        warnings,
    })
}

/// Trains the policy of one weight-vector subproblem.
pub fn train_subproblem(
    inst: &SystemInstance,
    space: &ActionSpace,
    encoder: EncoderConfig,
    weights: WeightVector,
    bounds: &ObjectiveBounds,
    config: &TrainConfig,
) -> Result<TrainOutcome, TrainError> {
    let reward = ScalarizedReward {
        weights,
        bounds: *bounds,
        mode: config.reward,
    };
    train_policy(inst, space, encoder, &reward, config)
}
