//! Complexity measures on the classification-only network: final-layer
//! weight spread and the localized learning coefficient (RLCT).

mod measure;
mod rlct;
mod sgld;
mod spread;

pub use measure::{measure_network, ClassificationLoss, Measurement};
pub use rlct::{estimate_rlct, summarize_chains, RlctEstimate};
pub use sgld::{eval_indices, sgld_sample, ChainRecord, RlctConfig, StochasticLoss};
pub use spread::{weight_spread, WeightSpread};
