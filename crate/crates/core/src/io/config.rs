//! Run configuration (TOML).
//!
//! ```toml
//! dataset = "../data/desk"      # relative paths resolve against the config file
//! seed = 42                     # bounds sampling and evolutionary runs
//!
//! [action_space]
//! qp_bins = 51
//! qs_bins = 51
//!
//! [model]
//! embedding_size = 128
//! num_heads = 8
//! variant = "two_stage"         # or "direct"
//! layers = 1
//!
//! [train]                       # every field optional
//! batch_size = 128
//! seed = 7
//! reward = { mode = "soft_penalty", lambda = 1.0 }
//!
//! [bounds]
//! method = "sample"             # or "train"
//! budget = 2000
//!
//! [moea]
//! population = 200
//! generations = 100
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{write_atomic, IoError};
use crate::env::ActionSpace;
use crate::moea::MoeaConfig;
use crate::policy::EncoderConfig;
use crate::trainer::TrainConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundsMethodName {
    Sample,
    Train,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundsSettings {
    pub method: BoundsMethodName,
    pub budget: usize,
}

impl Default for BoundsSettings {
    fn default() -> Self {
        Self {
            method: BoundsMethodName::Sample,
            budget: 2000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub dataset: PathBuf,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub action_space: ActionSpace,
    #[serde(default)]
    pub model: EncoderConfig,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub bounds: BoundsSettings,
    #[serde(default)]
    pub moea: MoeaConfig,
}

impl RunConfig {
    pub fn with_dataset(dataset: PathBuf) -> Self {
        Self {
            dataset,
            seed: 0,
            action_space: ActionSpace::default(),
            model: EncoderConfig::default(),
            train: TrainConfig::default(),
            bounds: BoundsSettings::default(),
            moea: MoeaConfig::default(),
        }
    }

    /// Parses and validates a config file; `dataset` is resolved against
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self, IoError> {
        let text = std::fs::read_to_string(path).map_err(|e| IoError::read(path, e))?;
        let mut cfg = Self::parse(&text).map_err(|m| IoError::invalid(path, m))?;
        if cfg.dataset.is_relative() {
            if let Some(dir) = path.parent() {
                cfg.dataset = dir.join(&cfg.dataset);
            }
        }
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let cfg: Self = toml::from_str(text).map_err(|e| e.to_string())?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.action_space.qp_bins < 2 || self.action_space.qs_bins < 2 {
            return Err("action_space: qp_bins and qs_bins must be at least 2".into());
        }
        self.model.validate().map_err(|e| e.to_string())?;
        self.train.validate().map_err(|e| e.to_string())?;
        self.moea.validate().map_err(|e| format!("moea: {e}"))?;
        if self.bounds.budget == 0 {
            return Err("bounds.budget must be at least 1".into());
        }
        // TOML integers are signed 64-bit.
        if self.seed > i64::MAX as u64 || self.train.seed > i64::MAX as u64 {
            return Err("seeds must fit in a signed 64-bit integer".into());
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is representable in TOML")
    }
}

/// Record written beside every output so the run can be repeated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSnapshot {
    pub command: String,
    pub args: Vec<String>,
    pub version: String,
    pub config: RunConfig,
}

impl RunSnapshot {
    pub fn new(command: &str, args: Vec<String>, config: RunConfig) -> Self {
        Self {
            command: command.to_string(),
            args,
            version: env!("CARGO_PKG_VERSION").to_string(),
            config,
        }
    }

    /// Writes `<output>.run.toml`.
    pub fn write_beside(&self, output: &Path) -> Result<PathBuf, IoError> {
        let mut name = output.file_name().map(|n| n.to_os_string()).unwrap_or_default();
        name.push(".run.toml");
        let path = output.with_file_name(name);
        let text = toml::to_string(self).map_err(|e| IoError::invalid(&path, e.to_string()))?;
        write_atomic(&path, |w| w.write_all(text.as_bytes()))?;
        Ok(path)
    }

    pub fn read(path: &Path) -> Result<Self, IoError> {
        let text = std::fs::read_to_string(path).map_err(|e| IoError::read(path, e))?;
        toml::from_str(&text).map_err(|e| IoError::invalid(path, e.to_string()))
    }
}
