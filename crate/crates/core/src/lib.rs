//! Self-modeling as an auxiliary task for small dense classifiers, together
//! with the two complexity measures used to study it: the spread of the
//! final-layer weights and a localized learning coefficient estimated with
//! stochastic-gradient Langevin dynamics.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases at
//! the crate root fix the precision used by the experiment pipeline.

pub mod complexity;
pub mod data;
pub mod error;
pub mod experiment;
pub mod nn;
pub mod oracle;
pub mod rng;
pub mod scalar;
pub mod selfmodel;

pub use error::{Error, ParamLocation, Result};
pub use scalar::Scalar;

pub type Network64 = nn::Network<f64>;
pub type Network32 = nn::Network<f32>;
pub type Gradients64 = nn::Gradients<f64>;
pub type RunRecord = experiment::RunRecord;
