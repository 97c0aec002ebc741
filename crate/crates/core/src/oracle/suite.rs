//! Self-contained verification suites: gradient checks on random small
//! networks and learning-coefficient estimates on toy models with known
//! answers. Shared by the test suite and the `verify` command.

use rand::Rng;

use super::gradcheck::check_gradients;
use super::posterior::{product_model_expectation, quadratic_expectation, quadratic_variance_1d, PRODUCT_MODEL_LAMBDA};
use super::toys::{symmetric_eigenvalues, LinearRegression, ProductModel, QuadraticBowl};
use crate::complexity::{estimate_rlct, sgld_sample, RlctConfig};
use crate::data::Inputs;
use crate::error::Result;
use crate::nn::{forward, init_network, Network, NetworkSpec};
use crate::rng::{stream_rng, streams};
use crate::scalar::Scalar;
use crate::selfmodel::{augment_head, prune_head, AugmentedHead, SelfModelConfig};

pub const GRAD_STEP: f64 = 1e-5;
pub const GRAD_TOLERANCE: f64 = 1e-4;
/// Denominator floor for components whose true gradient is zero.
pub const GRAD_FLOOR: f64 = 1e-6;
pub const MAX_CASE_PARAMS: usize = 200;

/// One random gradient-check problem.
#[derive(Debug, Clone)]
pub struct GradCase {
    pub net: Network<f64>,
    pub head: AugmentedHead,
    pub selfmodel: SelfModelConfig,
    pub inputs: Inputs<f64>,
    pub labels: Vec<usize>,
}

impl GradCase {
    pub fn has_head(&self) -> bool {
        self.head.aux_width > 0
    }

    pub fn has_embedding(&self) -> bool {
        self.net.embedding.is_some()
    }
}

/// Random architecture with at most [`MAX_CASE_PARAMS`] parameters, random
/// parameters (biases included) and a random batch of four.
///
/// Every third case gets an embedding front end; every other case a
/// self-model head on a random subset of hidden layers.
pub fn random_grad_case(seed: u64) -> Result<GradCase> {
    random_case(seed, seed % 3 == 2, seed % 2 == 1, 100)
}

/// Like [`random_grad_case`] but always with a self-model head.
pub fn random_augmented_case(seed: u64) -> Result<GradCase> {
    random_case(seed, seed % 3 == 2, true, 101)
}

fn random_case(seed: u64, embedded: bool, with_head: bool, stream: u64) -> Result<GradCase> {
    let mut rng = stream_rng(seed, streams::SYNTHETIC, stream);
    loop {
        let depth = rng.random_range(1..=3);
        let hidden: Vec<usize> = (0..depth).map(|_| rng.random_range(1..=6)).collect();
        let classes = rng.random_range(2..=4);
        let vocab = 7;
        let spec = if embedded {
            NetworkSpec::with_embedding(vocab, rng.random_range(2..=4), hidden.clone(), classes, seed)
        } else {
            NetworkSpec::mlp(rng.random_range(1..=5), hidden.clone(), classes, seed)
        };
        let selfmodel = if with_head {
            let mut targets: Vec<usize> = (0..depth).filter(|_| rng.random_bool(0.6)).collect();
            if targets.is_empty() {
                targets.push(rng.random_range(0..depth));
            }
            if rng.random_bool(0.5) {
                targets.reverse();
            }
            SelfModelConfig::new(targets, rng.random_range(0.1..5.0))
        } else {
            SelfModelConfig::baseline()
        };
        let (spec, head) = augment_head(&spec, &selfmodel)?;
        if spec.num_params() > MAX_CASE_PARAMS {
            continue;
        }
        let mut net: Network<f64> = init_network(&spec)?;
        let params: Vec<f64> = (0..net.num_params()).map(|_| 0.7 * f64::standard_normal(&mut rng)).collect();
        net.set_params_flat(&params)?;
        let batch = 4;
        let inputs = if embedded {
            let len = 5;
            Inputs::Tokens(ndarray::Array2::from_shape_fn((batch, len), |(_, c)| {
                // Keep at least one real token per row.
                if c == 0 { rng.random_range(1..vocab as u32) } else { rng.random_range(0..vocab as u32) }
            }))
        } else {
            Inputs::Dense(ndarray::Array2::from_shape_fn((batch, spec.input_dim), |_| f64::standard_normal(&mut rng)))
        };
        let labels = (0..batch).map(|_| rng.random_range(0..classes)).collect();
        return Ok(GradCase { net, head, selfmodel, inputs, labels });
    }
}

/// Whether the class logits of the pruned network equal the class slice of
/// the full output bit for bit.
pub fn pruning_is_exact(case: &GradCase) -> Result<bool> {
    let full = forward(&case.net, case.inputs.batch())?.output;
    let pruned = forward(&prune_head(&case.net, &case.head)?, case.inputs.batch())?.output;
    let classes = full.slice(ndarray::s![.., ..case.head.num_classes]);
    Ok(pruned.dim() == classes.dim() && pruned.iter().zip(classes).all(|(a, b)| a.to_bits() == b.to_bits()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCaseResult {
    pub seed: u64,
    pub num_params: usize,
    pub has_head: bool,
    pub has_embedding: bool,
    pub max_rel_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradSuiteReport {
    pub cases: Vec<GradCaseResult>,
}

impl GradSuiteReport {
    pub fn max_rel_error(&self) -> f64 {
        self.cases.iter().map(|c| c.max_rel_error).fold(0.0, f64::max)
    }

    pub fn passed(&self) -> bool {
        !self.cases.is_empty() && self.max_rel_error() <= GRAD_TOLERANCE
    }
}

pub fn gradient_suite(num_cases: u64) -> Result<GradSuiteReport> {
    let cases = (0..num_cases)
        .map(|seed| {
            let case = random_grad_case(seed)?;
            let report = check_gradients(
                &case.net,
                &case.inputs,
                &case.labels,
                &case.head,
                &case.selfmodel,
                GRAD_STEP,
                GRAD_FLOOR,
            )?;
            Ok(GradCaseResult {
                seed,
                num_params: report.num_params,
                has_head: case.has_head(),
                has_embedding: case.has_embedding(),
                max_rel_error: report.max_rel_error,
            })
        })
        .collect::<Result<_>>()?;
    Ok(GradSuiteReport { cases })
}

/// Sampler settings for the toy models. The tether is much weaker than the
/// network default so the tempered posterior, not the tether, sets the
/// spread; the long chains keep the Monte-Carlo error small.
pub fn toy_rlct_config(seed: u64) -> RlctConfig {
    RlctConfig {
        num_chains: 4,
        draws_per_chain: 200_000,
        burn_in: 20_000,
        step_size: 5e-5,
        localization: 0.12,
        minibatch_size: 100,
        eval_size: 2048,
        inverse_temperature: None,
        seed,
    }
}

pub const TOY_SAMPLES: usize = 1000;
pub const TOY_TOLERANCE: f64 = 0.3;
pub const VARIANCE_TOLERANCE: f64 = 0.2;

#[derive(Debug, Clone, PartialEq)]
pub struct VarianceCheck {
    pub empirical: f64,
    pub analytic: f64,
}

impl VarianceCheck {
    pub fn passed(&self) -> bool {
        (self.empirical / self.analytic - 1.0).abs() <= VARIANCE_TOLERANCE
    }
}

/// Stationary variance of the chain on `L(w) = w^2 / 2` against
/// `1 / (n beta + gamma)`.
pub fn quadratic_variance_check(seed: u64) -> Result<VarianceCheck> {
    let cfg = RlctConfig {
        num_chains: 4,
        draws_per_chain: 20_000,
        burn_in: 2_000,
        step_size: 1e-4,
        localization: 10.0,
        minibatch_size: 1,
        eval_size: 1,
        inverse_temperature: None,
        seed,
    };
    let mut bowl = QuadraticBowl { curvatures: vec![1.0], n: TOY_SAMPLES };
    let chains = sgld_sample::<f64, _>(&mut bowl, &[0.0], &cfg)?;
    let (sum, count) = chains.iter().flat_map(|c| &c.losses).fold((0.0, 0usize), |(s, k), l| (s + l, k + 1));
    // E[w^2] = 2 E[L] when L = w^2 / 2.
    let empirical = 2.0 * sum / count as f64;
    let n_beta = TOY_SAMPLES as f64 * cfg.beta(TOY_SAMPLES);
    Ok(VarianceCheck { empirical, analytic: quadratic_variance_1d(n_beta, cfg.localization) })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionCase {
    pub dim: usize,
    pub estimates: Vec<f64>,
    /// Exact posterior expectation for each repeat's design matrix.
    pub posterior: Vec<f64>,
}

impl RegressionCase {
    pub fn target(&self) -> f64 {
        self.dim as f64 / 2.0
    }

    pub fn mean(&self) -> f64 {
        mean(&self.estimates)
    }

    pub fn passed(&self) -> bool {
        (self.mean() / self.target() - 1.0).abs() <= TOY_TOLERANCE
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProductCase {
    pub estimates: Vec<f64>,
    /// Two-dimensional quadrature of the same tempered posterior.
    pub quadrature: Vec<f64>,
}

impl ProductCase {
    pub fn mean(&self) -> f64 {
        mean(&self.estimates)
    }

    /// Repeats strictly below the regular value for two parameters.
    pub fn below_regular(&self) -> usize {
        self.estimates.iter().filter(|&&l| l < 1.0).count()
    }

    pub fn passed(&self) -> bool {
        let needed = (self.estimates.len() * 4).div_ceil(5);
        (self.mean() / PRODUCT_MODEL_LAMBDA - 1.0).abs() <= TOY_TOLERANCE && self.below_regular() >= needed
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn regression_case(dim: usize, repeats: u64) -> Result<RegressionCase> {
    let mut estimates = Vec::new();
    let mut posterior = Vec::new();
    for rep in 0..repeats {
        let cfg = toy_rlct_config(rep);
        let mut model = LinearRegression::synthetic(TOY_SAMPLES, dim, 1.0, 100 + rep);
        let w_star = model.minimizer()?;
        let est = estimate_rlct::<f64, _>(&mut model, &w_star, &cfg)?;
        let n_beta = TOY_SAMPLES as f64 * cfg.beta(TOY_SAMPLES);
        estimates.push(est.lambda_hat);
        posterior.push(quadratic_expectation(&symmetric_eigenvalues(&model.hessian()), n_beta, cfg.localization));
    }
    Ok(RegressionCase { dim, estimates, posterior })
}

pub fn product_case(repeats: u64) -> Result<ProductCase> {
    let mut estimates = Vec::new();
    let mut quadrature = Vec::new();
    for rep in 0..repeats {
        let cfg = toy_rlct_config(rep);
        let mut model = ProductModel::synthetic(TOY_SAMPLES, 1.0, 200 + rep);
        let w_star = model.minimizer();
        let est = estimate_rlct::<f64, _>(&mut model, &w_star, &cfg)?;
        let n_beta = TOY_SAMPLES as f64 * cfg.beta(TOY_SAMPLES);
        estimates.push(est.lambda_hat);
        quadrature.push(product_model_expectation(&model, w_star, n_beta, cfg.localization));
    }
    Ok(ProductCase { estimates, quadrature })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToySuiteReport {
    pub variance: VarianceCheck,
    pub regression: Vec<RegressionCase>,
    pub product: ProductCase,
}

impl ToySuiteReport {
    pub fn passed(&self) -> bool {
        self.variance.passed() && self.regression.iter().all(RegressionCase::passed) && self.product.passed()
    }
}

pub fn toy_suite(repeats: u64) -> Result<ToySuiteReport> {
    Ok(ToySuiteReport {
        variance: quadratic_variance_check(0)?,
        regression: [1, 2, 10].into_iter().map(|d| regression_case(d, repeats)).collect::<Result<_>>()?,
        product: product_case(repeats)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_cases_cover_the_mix() {
        let cases: Vec<GradCase> = (0..12).map(|s| random_grad_case(s).unwrap()).collect();
        assert!(cases.iter().all(|c| c.net.num_params() <= MAX_CASE_PARAMS));
        assert!(cases.iter().any(|c| c.has_head() && c.has_embedding()));
        assert!(cases.iter().any(|c| !c.has_head() && !c.has_embedding()));
        assert!(cases.iter().any(|c| c.has_head() && c.selfmodel.target_layers.len() > 1));
    }

    #[test]
    fn case_generation_is_deterministic() {
        let a = random_grad_case(5).unwrap();
        let b = random_grad_case(5).unwrap();
        assert_eq!(a.net, b.net);
        assert_eq!(a.labels, b.labels);
    }
}
