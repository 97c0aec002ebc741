use ndarray::{Array2, ArrayView2, Axis};

use super::forward::{ForwardTrace, PAD_INDEX};
use super::network::{Dense, Network};
use crate::error::{shape_err, Result};
use crate::scalar::Scalar;

/// Parameter gradients, shaped exactly like the network they belong to.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<F> {
    pub layers: Vec<Dense<F>>,
    pub embedding: Option<Array2<F>>,
}

impl<F: Scalar> Gradients<F> {
    pub fn zeros_like(net: &Network<F>) -> Self {
        Self {
            layers: net.layers.iter().map(|l| Dense::zeros(l.fan_in(), l.fan_out())).collect(),
            embedding: net.embedding.as_ref().map(|e| Array2::zeros(e.dim())),
        }
    }

    /// Flatten in the same order as [`Network::params_flat`].
    pub fn flatten_into(&self, out: &mut Vec<F>) {
        out.clear();
        if let Some(e) = &self.embedding {
            out.extend(e.iter().copied());
        }
        for layer in &self.layers {
            out.extend(layer.weights.iter().copied());
            out.extend(layer.biases.iter().copied());
        }
    }

    pub fn is_zero(&self) -> bool {
        self.embedding.iter().flat_map(|e| e.iter()).all(|v| v.is_zero())
            && self
                .layers
                .iter()
                .all(|l| l.weights.iter().chain(l.biases.iter()).all(|v| v.is_zero()))
    }
}

/// Reverse-mode pass for a loss whose gradient with respect to the final
/// output is `output_grad`.
///
/// `target_grads` holds `(hidden_layer, grad)` pairs: extra gradient arriving
/// at that layer's post-activation values from elsewhere in the loss (the
/// self-model target path). They are added before the ReLU mask is applied.
pub fn backward<F: Scalar>(
    net: &Network<F>,
    trace: &ForwardTrace<F>,
    output_grad: ArrayView2<'_, F>,
    target_grads: &[(usize, ArrayView2<'_, F>)],
) -> Result<Gradients<F>> {
    let hidden = net.layers.len() - 1;
    if trace.activations.len() != hidden {
        return Err(shape_err("trace was not produced by this network"));
    }
    if output_grad.dim() != trace.output.dim() {
        return Err(shape_err(format!(
            "output gradient {:?} does not match output {:?}",
            output_grad.dim(),
            trace.output.dim()
        )));
    }
    for (layer, g) in target_grads {
        let act = trace
            .activations
            .get(*layer)
            .ok_or_else(|| shape_err(format!("target gradient for missing hidden layer {layer}")))?;
        if act.dim() != g.dim() {
            return Err(shape_err(format!(
                "target gradient {:?} does not match layer {layer} activations {:?}",
                g.dim(),
                act.dim()
            )));
        }
    }

    let mut layers: Vec<Dense<F>> = Vec::with_capacity(net.layers.len());
    let mut delta = output_grad.to_owned();
    for i in (0..=hidden).rev() {
        let x = trace.layer_input(i);
        let weights = delta.t().dot(x);
        let biases = delta.sum_axis(Axis(0));
        layers.push(Dense { weights, biases });
        let need_input_grad = i > 0 || net.embedding.is_some();
        if !need_input_grad {
            break;
        }
        let mut upstream = delta.dot(&net.layers[i].weights);
        if i > 0 {
            for (layer, g) in target_grads.iter().filter(|(l, _)| *l == i - 1) {
                debug_assert_eq!(*layer, i - 1);
                upstream += g;
            }
            let act = &trace.activations[i - 1];
            ndarray::Zip::from(&mut upstream).and(act).for_each(|d, &a| {
                if a <= F::zero() {
                    *d = F::zero();
                }
            });
        }
        delta = upstream;
    }
    layers.reverse();

    let embedding = match (&net.embedding, &trace.tokens) {
        (Some(table), Some(tokens)) => {
            let mut g = Array2::<F>::zeros(table.dim());
            for (doc, d) in tokens.outer_iter().zip(delta.outer_iter()) {
                let count = doc.iter().filter(|&&t| t != PAD_INDEX).count();
                if count == 0 {
                    continue;
                }
                let share = d.mapv(|v| v / F::from_usize_lossy(count));
                for &t in doc.iter().filter(|&&t| t != PAD_INDEX) {
                    let mut row = g.row_mut(t as usize);
                    row += &share;
                }
            }
            Some(g)
        }
        (None, _) => None,
        (Some(_), None) => return Err(shape_err("trace lacks the token batch for embedding gradients")),
    };
    Ok(Gradients { layers, embedding })
}
