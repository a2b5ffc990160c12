//! Attention policy network.
//!
//! Static inputs are embedded per (reservoir, period) and per (area,
//! period), then refined by self-attention across the periods of the same
//! reservoir or area. At decision time the embedding of the current
//! `(i, t)` or `(j, t)` is fused with the dynamic state (scaled elevation,
//! distance and water already delivered) and fed to one of three heads:
//! turbine flow bin, supply flag, supply amount bin.
//!
//! Two encoder variants share this interface:
//!
//! - [`EncoderVariant::TwoStage`] encodes static inputs once per instance
//!   and fuses dynamic state afterwards (cheap per step);
//! - [`EncoderVariant::Direct`] appends the dynamic state to every period
//!   token and reruns the encoder at each decision.
//!
//! All linear layers are initialized uniformly on `±1/√fan_in` from a
//! seeded generator. Attention logits are divided by `√(d / heads)`.

mod inputs;
mod model;

pub use inputs::StaticInputs;
pub use model::{PolicyModel, PolicyRunner, MODEL_FORMAT_VERSION};

use thiserror::Error;

use crate::tensor::TensorError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EncoderVariant {
    #[default]
    TwoStage,
    Direct,
}

impl EncoderVariant {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::TwoStage => "two_stage",
            Self::Direct => "direct",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "two_stage" => Some(Self::TwoStage),
            "direct" => Some(Self::Direct),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EncoderConfig {
    pub embedding_size: usize,
    pub num_heads: usize,
    pub variant: EncoderVariant,
    /// Attention blocks stacked in each encoder.
    pub layers: usize,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self {
            embedding_size: 128,
            num_heads: 8,
            variant: EncoderVariant::TwoStage,
            layers: 1,
        }
    }
}

impl EncoderConfig {
    pub fn validate(&self) -> Result<(), PolicyError> {
        if self.embedding_size == 0 || self.num_heads == 0 || self.layers == 0 {
            return Err(PolicyError::InvalidConfig(
                "embedding_size, num_heads and layers must be positive".into(),
            ));
        }
        if !self.embedding_size.is_multiple_of(self.num_heads) {
            return Err(PolicyError::InvalidConfig(format!(
                "embedding_size {} is not divisible by num_heads {}",
                self.embedding_size, self.num_heads
            )));
        }
        Ok(())
    }

    pub fn head_dim(&self) -> usize {
        self.embedding_size / self.num_heads
    }
}

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error("invalid encoder config: {0}")]
    InvalidConfig(String),
    #[error("incompatible checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Tensor(#[from] TensorError),
}
