//! Policy-gradient training with a greedy-rollout baseline.
//!
//! Each iteration samples a batch of episodes from the learning policy,
//! scores them, and subtracts the reward of a greedy decode of a frozen
//! baseline copy. The loss `−(1/B)·Σ_b adv_b·Σ log p` is minimized with
//! Adam. At the end of every epoch a one-sided paired t-test compares the
//! learner against the baseline and promotes the learner when it is
//! significantly better.

mod reinforce;
mod sweep;
mod ttest;

pub use reinforce::{
    reinforce_gradient, train_policy, train_subproblem, CurvePoint, RewardFn, ScalarizedReward, TrainOutcome,
    ZERO_REWARD_WARNING_STREAK,
};
pub use sweep::{greedy_decode, single_objective_extrema, train_sweep, SubproblemResult};
pub use ttest::{paired_t_test, regularized_incomplete_beta, student_t_upper_tail, TTest};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::{EnvError, RewardMode};
use crate::hydro::HydroError;
use crate::policy::{PolicyError, PolicyModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub epochs: usize,
    pub iterations_per_epoch: usize,
    /// Learning rate before `lr_switch_epoch`.
    pub lr_high: f64,
    /// Learning rate from `lr_switch_epoch` on.
    pub lr_low: f64,
    pub lr_switch_epoch: usize,
    pub ttest_alpha: f64,
    /// Paired episodes compared at each epoch end.
    pub eval_batch: usize,
    pub seed: u64,
    pub reward: RewardMode,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 128,
            epochs: 5,
            iterations_per_epoch: 200,
            lr_high: 1e-3,
            lr_low: 1e-4,
            lr_switch_epoch: 3,
            ttest_alpha: 0.05,
            eval_batch: 128,
            seed: 0,
            reward: RewardMode::Hard,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |m: &str| Err(TrainError::InvalidConfig(m.to_string()));
        if self.batch_size == 0 || self.epochs == 0 || self.iterations_per_epoch == 0 {
            return bad("batch_size, epochs and iterations_per_epoch must be positive");
        }
        if self.eval_batch < 2 {
            return bad("eval_batch must be at least 2");
        }
        if !(self.lr_high > 0.0 && self.lr_low > 0.0 && self.lr_low <= self.lr_high) {
            return bad("learning rates must be positive with lr_low <= lr_high");
        }
        if !(self.ttest_alpha > 0.0 && self.ttest_alpha < 1.0) {
            return bad("ttest_alpha must lie in (0, 1)");
        }
        if let RewardMode::SoftPenalty { lambda } = self.reward {
            if !(lambda >= 0.0 && lambda.is_finite()) {
                return bad("soft penalty lambda must be finite and nonnegative");
            }
        }
        Ok(())
    }

    /// Learning rate used throughout `epoch` (0-based).
    pub fn lr(&self, epoch: usize) -> f64 {
        if epoch < self.lr_switch_epoch {
            self.lr_high
        } else {
            self.lr_low
        }
    }
}

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("paired samples differ in length ({a} vs {b})")]
    SampleMismatch { a: usize, b: usize },
    #[error("t-test needs at least 2 paired samples, got {0}")]
    TooFewSamples(usize),
    #[error("training diverged at iteration {iteration}: {detail}")]
    Diverged {
        iteration: usize,
        detail: String,
        /// Parameters from the last iteration with finite values.
        last_good: Box<PolicyModel>,
    },
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Hydro(#[from] HydroError),
}
