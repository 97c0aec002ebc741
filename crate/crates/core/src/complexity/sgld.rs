//! Localized stochastic-gradient Langevin dynamics.

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stream_rng, streams, StreamRng};
use crate::scalar::Scalar;

/// Minibatch loss oracle over a flat parameter vector.
///
/// `loss_and_grad` and `loss` evaluate the mean per-sample loss over the
/// samples named by `indices` (each in `0..num_samples()`).
pub trait StochasticLoss<F: Scalar> {
    fn num_params(&self) -> usize;
    fn num_samples(&self) -> usize;
    fn loss_and_grad(&mut self, params: &[F], indices: &[usize], grad: &mut Vec<F>) -> Result<f64>;
    fn loss(&mut self, params: &[F], indices: &[usize]) -> Result<f64>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[serde(default)]
pub struct RlctConfig {
    pub num_chains: usize,
    pub draws_per_chain: usize,
    pub burn_in: usize,
    /// SGLD step size epsilon.
    pub step_size: f64,
    /// Strength gamma of the tether `gamma/2 * |w - w*|^2`.
    pub localization: f64,
    pub minibatch_size: usize,
    /// Size of the fixed subset on which recorded losses are evaluated;
    /// the whole dataset when it is smaller.
    pub eval_size: usize,
    /// Defaults to `1 / ln n`.
    pub inverse_temperature: Option<f64>,
    pub seed: u64,
}

impl Default for RlctConfig {
    fn default() -> Self {
        Self {
            num_chains: 4,
            draws_per_chain: 400,
            burn_in: 200,
            step_size: 1e-5,
            localization: 100.0,
            minibatch_size: 256,
            eval_size: 2048,
            inverse_temperature: None,
            seed: 0,
        }
    }
}

impl RlctConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if self.num_chains == 0
            || self.draws_per_chain == 0
            || self.minibatch_size == 0
            || self.eval_size == 0
            || !positive(self.step_size)
            || !positive(self.localization)
            || !self.inverse_temperature.is_none_or(positive)
        {
            return Err(Error::Config(format!("invalid RLCT configuration {self:?}")));
        }
        Ok(())
    }

    /// Inverse temperature used for a dataset of `n` samples.
    pub fn beta(&self, n: usize) -> f64 {
        self.inverse_temperature.unwrap_or_else(|| 1.0 / (n as f64).ln())
    }
}

/// Recorded post-burn-in losses of one chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainRecord {
    pub losses: Vec<f64>,
    /// Set when a loss went non-finite; the chain stopped there.
    pub diverged: bool,
}

/// Evaluation subset shared by every chain: the first `eval_size` entries of a
/// seeded permutation, or everything when the dataset is smaller.
pub fn eval_indices(n: usize, cfg: &RlctConfig) -> Vec<usize> {
    if cfg.eval_size >= n {
        return (0..n).collect();
    }
    let mut rng = stream_rng(cfg.seed, streams::RLCT_EVAL_SUBSET, 0);
    let mut idx = index::sample(&mut rng, n, cfg.eval_size).into_vec();
    idx.sort_unstable();
    idx
}

/// Run every chain and return their recorded losses.
///
/// Each chain starts at `w_star` and iterates
///
/// ```text
/// w <- w - eps/2 * (n * beta * grad L_m(w) + gamma * (w - w_star)) + N(0, eps)
/// ```
///
/// recording the evaluation-subset loss after every post-burn-in step. Chain
/// `c` draws from its own counter stream, so records do not depend on the
/// order in which chains are run.
pub fn sgld_sample<F: Scalar, L: StochasticLoss<F> + ?Sized>(
    loss: &mut L,
    w_star: &[F],
    cfg: &RlctConfig,
) -> Result<Vec<ChainRecord>> {
    cfg.validate()?;
    if w_star.len() != loss.num_params() {
        return Err(Error::Shape(format!(
            "w* has {} entries, loss expects {}",
            w_star.len(),
            loss.num_params()
        )));
    }
    if !w_star.iter().all(|v| v.is_finite()) {
        return Err(Error::Data("w* contains non-finite values".into()));
    }
    let eval = eval_indices(loss.num_samples(), cfg);
    (0..cfg.num_chains)
        .map(|c| run_chain(loss, w_star, &eval, cfg, stream_rng(cfg.seed, streams::SGLD_CHAIN, c as u64)))
        .collect()
}

fn run_chain<F: Scalar, L: StochasticLoss<F> + ?Sized>(
    loss: &mut L,
    w_star: &[F],
    eval: &[usize],
    cfg: &RlctConfig,
    mut rng: StreamRng,
) -> Result<ChainRecord> {
    let n = loss.num_samples();
    let m = cfg.minibatch_size.min(n);
    let n_beta = F::from_f64_lossy(n as f64 * cfg.beta(n));
    let half_eps = F::from_f64_lossy(cfg.step_size / 2.0);
    let gamma = F::from_f64_lossy(cfg.localization);
    let noise_std = F::from_f64_lossy(cfg.step_size.sqrt());

    let mut w = w_star.to_vec();
    let mut grad = Vec::with_capacity(w.len());
    let mut losses = Vec::with_capacity(cfg.draws_per_chain);
    for step in 0..cfg.burn_in + cfg.draws_per_chain {
        let batch = index::sample(&mut rng, n, m).into_vec();
        let l = loss.loss_and_grad(&w, &batch, &mut grad)?;
        if !l.is_finite() || !grad.iter().all(|g| g.is_finite()) {
            return Ok(ChainRecord { losses, diverged: true });
        }
        for ((wi, &gi), &si) in w.iter_mut().zip(&grad).zip(w_star) {
            let drift = n_beta * gi + gamma * (*wi - si);
            *wi = *wi - half_eps * drift + noise_std * F::standard_normal(&mut rng);
        }
        if step >= cfg.burn_in {
            let l = loss.loss(&w, eval)?;
            if !l.is_finite() {
                return Ok(ChainRecord { losses, diverged: true });
            }
            losses.push(l);
        }
    }
    Ok(ChainRecord { losses, diverged: false })
}
