use thiserror::Error;

use crate::decomposition::BoundsError;
use crate::env::EnvError;
use crate::hydro::HydroError;
use crate::io::IoError;
use crate::moea::MoeaError;
use crate::pareto::ParetoError;
use crate::policy::PolicyError;
use crate::tensor::TensorError;
use crate::trainer::TrainError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Crate-level error; every module error converts into it.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Hydro(#[from] HydroError),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Bounds(#[from] BoundsError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Moea(#[from] MoeaError),
    #[error(transparent)]
    Pareto(#[from] ParetoError),
    #[error(transparent)]
    Io(#[from] IoError),
}
