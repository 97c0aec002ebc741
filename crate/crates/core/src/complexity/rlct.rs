use serde::{Deserialize, Serialize};

use super::sgld::{eval_indices, sgld_sample, ChainRecord, RlctConfig, StochasticLoss};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Localized learning-coefficient estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RlctEstimate {
    /// Mean of `per_chain`.
    pub lambda_hat: f64,
    /// One value per chain that finished; diverged chains are left out.
    pub per_chain: Vec<f64>,
    /// Standard deviation across chains over sqrt(chain count); 0 for a
    /// single chain.
    pub mc_std_error: f64,
    /// Negative estimate, or at least one chain hit a non-finite loss.
    pub anomalous: bool,
    pub diverged_chains: usize,
    /// Loss at `w*` on the evaluation subset.
    pub reference_loss: f64,
    pub dataset_size: usize,
    pub beta: f64,
}

/// Turn recorded chains into an estimate:
/// `lambda_chain = n * beta * (mean recorded loss - reference_loss)`.
pub fn summarize_chains(
    chains: &[ChainRecord],
    reference_loss: f64,
    dataset_size: usize,
    beta: f64,
) -> Result<RlctEstimate> {
    let n_beta = dataset_size as f64 * beta;
    let per_chain: Vec<f64> = chains
        .iter()
        .filter(|c| !c.diverged && !c.losses.is_empty())
        .map(|c| n_beta * (c.losses.iter().sum::<f64>() / c.losses.len() as f64 - reference_loss))
        .collect();
    let diverged_chains = chains.iter().filter(|c| c.diverged).count();
    if per_chain.is_empty() {
        return Err(Error::Estimation(format!(
            "all {} chains diverged (reference loss {reference_loss}, n*beta {n_beta})",
            chains.len()
        )));
    }
    let k = per_chain.len() as f64;
    let lambda_hat = per_chain.iter().sum::<f64>() / k;
    let mc_std_error = if per_chain.len() > 1 {
        let var = per_chain.iter().map(|l| (l - lambda_hat).powi(2)).sum::<f64>() / (k - 1.0);
        (var / k).sqrt()
    } else {
        0.0
    };
    Ok(RlctEstimate {
        lambda_hat,
        per_chain,
        mc_std_error,
        anomalous: lambda_hat < 0.0 || diverged_chains > 0,
        diverged_chains,
        reference_loss,
        dataset_size,
        beta,
    })
}

/// Estimate the learning coefficient of `loss` around `w_star`.
pub fn estimate_rlct<F: Scalar, L: StochasticLoss<F> + ?Sized>(
    loss: &mut L,
    w_star: &[F],
    cfg: &RlctConfig,
) -> Result<RlctEstimate> {
    cfg.validate()?;
    let n = loss.num_samples();
    let eval = eval_indices(n, cfg);
    let reference_loss = loss.loss(w_star, &eval)?;
    if !reference_loss.is_finite() {
        return Err(Error::Estimation(format!("non-finite loss {reference_loss} at w*")));
    }
    let chains = sgld_sample(loss, w_star, cfg)?;
    summarize_chains(&chains, reference_loss, n, cfg.beta(n))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain(losses: &[f64]) -> ChainRecord {
        ChainRecord { losses: losses.to_vec(), diverged: false }
    }

    #[test]
    fn zero_excess_loss_gives_zero() {
        let est = summarize_chains(&[chain(&[0.3; 5]), chain(&[0.3; 5])], 0.3, 1000, 0.2).unwrap();
        assert_eq!(est.lambda_hat, 0.0);
        assert_eq!(est.mc_std_error, 0.0);
        assert!(!est.anomalous);
    }

    #[test]
    fn doubling_n_beta_doubles_estimate() {
        let chains = [chain(&[1.1, 1.3]), chain(&[1.2, 1.4])];
        let a = summarize_chains(&chains, 1.0, 100, 0.1).unwrap().lambda_hat;
        let b = summarize_chains(&chains, 1.0, 100, 0.2).unwrap().lambda_hat;
        let c = summarize_chains(&chains, 1.0, 200, 0.1).unwrap().lambda_hat;
        assert!((b - 2.0 * a).abs() < 1e-12);
        assert!((c - 2.0 * a).abs() < 1e-12);
    }

    #[test]
    fn negative_and_diverged_are_anomalous() {
        let est = summarize_chains(&[chain(&[0.9, 0.8])], 1.0, 100, 0.1).unwrap();
        assert!(est.lambda_hat < 0.0 && est.anomalous);

        let diverged = ChainRecord { losses: vec![1.5], diverged: true };
        let est = summarize_chains(&[chain(&[1.1]), diverged.clone()], 1.0, 100, 0.1).unwrap();
        assert_eq!(est.per_chain.len(), 1);
        assert!(est.anomalous);
        assert_eq!(est.diverged_chains, 1);

        assert!(matches!(summarize_chains(&[diverged], 1.0, 100, 0.1), Err(Error::Estimation(_))));
    }

    #[test]
    fn standard_error_across_chains() {
        let est = summarize_chains(&[chain(&[1.0]), chain(&[2.0]), chain(&[3.0])], 0.0, 10, 0.1).unwrap();
        assert!((est.lambda_hat - 2.0).abs() < 1e-12);
        assert!((est.mc_std_error - (1.0f64 / 3.0).sqrt()).abs() < 1e-12);
    }
}
