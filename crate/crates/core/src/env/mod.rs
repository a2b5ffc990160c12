//! Episodic decision process over a [`SystemInstance`](crate::SystemInstance).
//!
//! An episode visits periods in order; within a period each reservoir first
//! chooses its turbine flow, then for every area decides whether to supply
//! it and, if so, how much. The environment tracks the storage and the
//! water already delivered to each area so that every decision sees the
//! state left by the previous ones. Policies are plain probability oracles
//! (see [`Policy`]), so the same loop drives training, greedy evaluation
//! and random search.

mod action;
mod random;
mod reward;
mod rollout;
mod trace;

pub use action::{ActionSpace, StepKind};
pub use random::random_feasible_schedule;
pub use reward::{episode_reward, RewardMode};
pub use rollout::{
    greedy_rollout, rollout, DecisionStep, Episode, FeatureScaler, Observation,
    Policy, UniformPolicy,
};
pub use trace::write_trace;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("policy returned {actual} probabilities for {step}, expected {expected}")]
    WrongArity {
        step: String,
        expected: usize,
        actual: usize,
    },
    #[error("policy distribution for {step} is invalid: {reason}")]
    InvalidDistribution { step: String, reason: String },
    #[error(transparent)]
    Hydro(#[from] crate::hydro::HydroError),
    #[error("trace export failed: {0}")]
    Trace(String),
}

#[cfg(test)]
mod tests;
