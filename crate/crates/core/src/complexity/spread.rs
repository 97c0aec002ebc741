use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::Network;
use crate::scalar::Scalar;

/// Spread of the final-layer weight distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightSpread {
    /// Population standard deviation (divide by count), biases excluded.
    pub std_dev: f64,
    pub num_weights: usize,
}

/// Standard deviation of the output-layer weight entries of a pruned network.
pub fn weight_spread<F: Scalar>(net: &Network<F>) -> Result<WeightSpread> {
    let out = net.output_layer();
    if net.spec.aux_outputs != 0 || out.fan_out() != net.spec.num_classes {
        return Err(Error::Contract(format!(
            "weight spread needs a classification-only head: {} output rows for {} classes",
            out.fan_out(),
            net.spec.num_classes
        )));
    }
    let count = out.weights.len();
    let mean = out.weights.iter().map(|w| w.to_f64_lossy()).sum::<f64>() / count as f64;
    let var = out
        .weights
        .iter()
        .map(|w| {
            let d = w.to_f64_lossy() - mean;
            d * d
        })
        .sum::<f64>()
        / count as f64;
    Ok(WeightSpread { std_dev: var.sqrt(), num_weights: count })
}
