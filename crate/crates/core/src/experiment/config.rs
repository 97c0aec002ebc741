use serde::{Deserialize, Serialize};

use crate::complexity::RlctConfig;
use crate::error::{config_err, Result};
use crate::nn::{NetworkSpec, OptimizerSettings};
use crate::selfmodel::SelfModelConfig;

/// Version stamped into configs and records.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetKind {
    Mnist,
    Text,
    /// Gaussian class clusters generated in memory; used by tests and smoke runs.
    Synthetic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[serde(default)]
pub struct DatasetConfig {
    pub kind: DatasetKind,
    /// Keep at most this many training samples (seeded draw).
    pub train_limit: Option<usize>,
    pub test_limit: Option<usize>,
    pub subset_seed: u64,
    /// Text only.
    pub vocab_size: usize,
    /// Text only: tokens kept per document, tail truncated.
    pub max_len: usize,
    /// Synthetic only.
    pub synthetic: SyntheticConfig,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            kind: DatasetKind::Mnist,
            train_limit: None,
            test_limit: None,
            subset_seed: 0,
            vocab_size: 10_000,
            max_len: 256,
            synthetic: SyntheticConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[serde(default)]
pub struct SyntheticConfig {
    pub train_size: usize,
    pub test_size: usize,
    pub input_dim: usize,
    pub num_classes: usize,
    /// Distance scale between class centers relative to unit noise.
    pub separation: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self { train_size: 512, test_size: 256, input_dim: 8, num_classes: 3, separation: 2.0, seed: 0 }
    }
}

/// One trainable configuration; every seed in `seeds` is one repeat.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub id: String,
    #[serde(default)]
    pub dataset: DatasetConfig,
    /// `seed` is replaced by the run seed; for text data `front_end` vocabulary
    /// size follows the dataset.
    pub architecture: NetworkSpec,
    #[serde(default = "SelfModelConfig::baseline")]
    pub selfmodel: SelfModelConfig,
    pub epochs: usize,
    pub seeds: Vec<u64>,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default)]
    pub optimizer: OptimizerSettings,
    #[serde(default)]
    pub rlct: RlctConfig,
    /// Epochs after which the learning coefficient is measured; empty means
    /// the final epoch only.
    #[serde(default)]
    pub metrics_epochs: Vec<usize>,
    /// Free-form tags carried into records and reports (e.g. `hidden`, `aw`).
    #[serde(default)]
    pub labels: std::collections::BTreeMap<String, String>,
}

fn default_batch_size() -> usize {
    128
}

impl ExperimentConfig {
    pub fn repeats(&self) -> usize {
        self.seeds.len()
    }

    pub fn is_baseline(&self) -> bool {
        self.selfmodel.is_baseline()
    }

    pub fn rlct_epochs(&self) -> Vec<usize> {
        if self.metrics_epochs.is_empty() {
            vec![self.epochs]
        } else {
            self.metrics_epochs.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.id.is_empty() {
            return Err(config_err("experiment id must not be empty"));
        }
        if self.epochs == 0 {
            return Err(config_err(format!("{}: epochs must be >= 1", self.id)));
        }
        if self.seeds.is_empty() {
            return Err(config_err(format!("{}: at least one seed is required", self.id)));
        }
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.seeds.len() {
            return Err(config_err(format!("{}: duplicate seeds", self.id)));
        }
        if self.batch_size == 0 {
            return Err(config_err(format!("{}: batch_size must be positive", self.id)));
        }
        if let Some(&e) = self.metrics_epochs.iter().find(|&&e| e == 0 || e > self.epochs) {
            return Err(config_err(format!("{}: metrics epoch {e} outside 1..={}", self.id, self.epochs)));
        }
        self.architecture.validate()?;
        self.selfmodel.validate(&self.architecture)?;
        self.optimizer.validate()?;
        self.rlct.validate()?;
        Ok(())
    }
}
