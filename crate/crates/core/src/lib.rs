//! Multiobjective scheduling of hydropower reservoir systems.
//!
//! The crate models a set of reservoirs that generate power and supply
//! water to residential areas over a monthly horizon, and optimizes three
//! competing objectives: total power generation, the ecological AAPFD
//! flow-deviation index, and water-supply revenue.
//!
//! Three solver families share one domain model:
//!
//! - [`trainer`]: an attention-based policy ([`policy`]) trained with
//!   REINFORCE and a greedy-rollout baseline, one model per weight vector
//!   of the [`decomposition`] grid;
//! - [`moea`]: NSGA-III and MOEA/D over real-coded schedule genomes;
//! - [`pareto`]: front assembly, hypervolume and improvement reporting.
//!
//! The decision process itself lives in [`env`], the physical model in
//! [`hydro`], the autodiff substrate in [`tensor`] and file formats in [`io`].

// NaN-rejecting `!(x > 0.0)` checks and index loops over parallel arrays
// are deliberate in the numeric code.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop, clippy::too_many_arguments)]

pub mod decomposition;
pub mod env;
pub mod error;
pub mod fixtures;
pub mod hydro;
pub mod io;
pub mod moea;
pub mod pareto;
pub mod policy;
pub mod rng;
pub mod tensor;
pub mod trainer;

pub use decomposition::{ObjectiveBounds, WeightVector};
pub use env::{ActionSpace, Episode, RewardMode};
pub use error::{Error, Result};
pub use hydro::{
    Decisions, ElevationStorageCurve, ObjectiveTriple, OperationSchedule, SystemInstance,
};
pub use policy::{EncoderConfig, EncoderVariant, PolicyModel};
pub use trainer::TrainConfig;
