use ndarray::{Array2, ArrayView2, Axis};

use super::network::{Dense, Network};
use crate::error::{shape_err, Error, Result};
use crate::scalar::Scalar;

/// Index reserved for padding positions in token batches.
pub const PAD_INDEX: u32 = 0;

/// A batch fed to [`forward`]: dense feature rows, or padded token rows for
/// networks with an embedding front end.
#[derive(Debug, Clone, Copy)]
pub enum Batch<'a, F> {
    Dense(ArrayView2<'a, F>),
    Tokens(ArrayView2<'a, u32>),
}

impl<F> Batch<'_, F> {
    pub fn len(&self) -> usize {
        match self {
            Batch::Dense(x) => x.nrows(),
            Batch::Tokens(t) => t.nrows(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Everything the backward pass needs from one forward evaluation.
#[derive(Debug, Clone)]
pub struct ForwardTrace<F> {
    /// Input to the first dense layer (the pooled embedding when a front end
    /// is present).
    pub input: Array2<F>,
    pub tokens: Option<Array2<u32>>,
    /// Post-ReLU activations of every hidden layer, `batch x width`.
    pub activations: Vec<Array2<F>>,
    /// Raw final-layer outputs: class logits, then any auxiliary predictions.
    pub output: Array2<F>,
}

impl<F: Scalar> ForwardTrace<F> {
    pub fn batch_size(&self) -> usize {
        self.output.nrows()
    }

    /// Activations feeding dense layer `i` (`input` for the first layer).
    pub(crate) fn layer_input(&self, i: usize) -> &Array2<F> {
        if i == 0 {
            &self.input
        } else {
            &self.activations[i - 1]
        }
    }
}

fn affine<F: Scalar>(x: &Array2<F>, layer: &Dense<F>) -> Array2<F> {
    let mut z = x.dot(&layer.weights.t());
    z += &layer.biases;
    z
}

/// Mean of embedding rows over the non-padding positions of each document.
/// Documents consisting only of padding pool to the zero vector.
pub fn mean_pool<F: Scalar>(table: &Array2<F>, tokens: ArrayView2<'_, u32>) -> Result<Array2<F>> {
    let vocab = table.nrows();
    let mut pooled = Array2::<F>::zeros((tokens.nrows(), table.ncols()));
    for (doc, mut out) in tokens.outer_iter().zip(pooled.outer_iter_mut()) {
        let mut count = 0usize;
        for &t in doc.iter().filter(|&&t| t != PAD_INDEX) {
            let row = table.row(
                usize::try_from(t)
                    .ok()
                    .filter(|&t| t < vocab)
                    .ok_or_else(|| Error::Data(format!("token index {t} outside vocabulary of {vocab}")))?,
            );
            out += &row;
            count += 1;
        }
        if count > 0 {
            out /= F::from_usize_lossy(count);
        }
    }
    Ok(pooled)
}

pub fn forward<F: Scalar>(net: &Network<F>, batch: Batch<'_, F>) -> Result<ForwardTrace<F>> {
    if batch.is_empty() {
        return Err(shape_err("empty batch"));
    }
    let (input, tokens) = match (batch, &net.embedding) {
        (Batch::Dense(x), None) => {
            if x.ncols() != net.spec.input_dim {
                return Err(shape_err(format!(
                    "batch width {} does not match input_dim {}",
                    x.ncols(),
                    net.spec.input_dim
                )));
            }
            if !x.iter().all(|v| v.is_finite()) {
                return Err(Error::Data("non-finite value in input batch".into()));
            }
            (x.to_owned(), None)
        }
        (Batch::Tokens(t), Some(table)) => (mean_pool(table, t)?, Some(t.to_owned())),
        (Batch::Dense(_), Some(_)) => {
            return Err(shape_err("network has an embedding front end; expected a token batch"))
        }
        (Batch::Tokens(_), None) => {
            return Err(shape_err("network has no embedding front end; expected a dense batch"))
        }
    };

    let hidden = net.layers.len() - 1;
    let mut activations = Vec::with_capacity(hidden);
    for (i, layer) in net.layers[..hidden].iter().enumerate() {
        let x = if i == 0 { &input } else { &activations[i - 1] };
        let mut z = affine(x, layer);
        z.mapv_inplace(|v| if v > F::zero() { v } else { F::zero() });
        activations.push(z);
    }
    let last = activations.last().unwrap_or(&input);
    let output = affine(last, &net.layers[hidden]);
    Ok(ForwardTrace { input, tokens, activations, output })
}

/// Argmax over the first `num_classes` columns; the lowest index wins ties.
pub fn predict_classes<F: Scalar>(output: &Array2<F>, num_classes: usize) -> Vec<usize> {
    output
        .axis_iter(Axis(0))
        .map(|row| {
            let mut best = 0;
            for c in 1..num_classes {
                if row[c] > row[best] {
                    best = c;
                }
            }
            best
        })
        .collect()
}
