use serde::{Deserialize, Serialize};

use super::rlct::{estimate_rlct, RlctEstimate};
use super::sgld::{RlctConfig, StochasticLoss};
use super::spread::{weight_spread, WeightSpread};
use crate::data::Dataset;
use crate::error::Result;
use crate::nn::{backward, cross_entropy, forward, Gradients, Network};
use crate::scalar::Scalar;
use crate::selfmodel::{prune_head, AugmentedHead};

/// Plain cross-entropy of a classification-only network, as a function of its
/// flattened parameters.
pub struct ClassificationLoss<'a, F> {
    net: Network<F>,
    data: &'a Dataset,
}

impl<'a, F: Scalar> ClassificationLoss<'a, F> {
    pub fn new(net: Network<F>, data: &'a Dataset) -> Self {
        Self { net, data }
    }

    fn load(&mut self, params: &[F]) -> Result<()> {
        self.net.set_params_flat(params)
    }
}

impl<F: Scalar> StochasticLoss<F> for ClassificationLoss<'_, F> {
    fn num_params(&self) -> usize {
        self.net.num_params()
    }

    fn num_samples(&self) -> usize {
        self.data.len()
    }

    fn loss_and_grad(&mut self, params: &[F], indices: &[usize], grad: &mut Vec<F>) -> Result<f64> {
        self.load(params)?;
        let (inputs, labels) = self.data.gather::<F>(indices);
        let trace = forward(&self.net, inputs.batch())?;
        let (loss, dlogits) = cross_entropy(trace.output.view(), &labels)?;
        let g: Gradients<F> = backward(&self.net, &trace, dlogits.view(), &[])?;
        g.flatten_into(grad);
        Ok(loss.to_f64_lossy())
    }

    fn loss(&mut self, params: &[F], indices: &[usize]) -> Result<f64> {
        self.load(params)?;
        let mut total = 0.0;
        // Bounded chunks keep memory flat for large evaluation sets.
        for chunk in indices.chunks(4096) {
            let (inputs, labels) = self.data.gather::<F>(chunk);
            let trace = forward(&self.net, inputs.batch())?;
            let (loss, _) = cross_entropy(trace.output.view(), &labels)?;
            total += loss.to_f64_lossy() * chunk.len() as f64;
        }
        Ok(total / indices.len() as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub spread: WeightSpread,
    pub rlct: RlctEstimate,
}

/// Prune the self-model rows, then measure final-layer spread and the
/// learning coefficient of the pure classification loss over all remaining
/// parameters (biases and embeddings included).
pub fn measure_network<F: Scalar>(
    net: &Network<F>,
    head: &AugmentedHead,
    data: &Dataset,
    cfg: &RlctConfig,
) -> Result<Measurement> {
    let pruned = prune_head(net, head)?;
    let spread = weight_spread(&pruned)?;
    let w_star = pruned.params_flat();
    let mut loss = ClassificationLoss::new(pruned, data);
    let rlct = estimate_rlct(&mut loss, &w_star, cfg)?;
    Ok(Measurement { spread, rlct })
}
