use serde::{Deserialize, Serialize};

use crate::error::{config_err, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Relu,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Pooling {
    #[default]
    Mean,
}

/// Token-embedding front end. Index 0 is padding and index 1 is
/// out-of-vocabulary; both count toward `vocab_size`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbeddingSpec {
    pub vocab_size: usize,
    pub embed_dim: usize,
    #[serde(default)]
    pub pooling: Pooling,
}

/// Architecture of a layered ReLU network.
///
/// `hidden_dims` lists the hidden widths in order; the output layer emits
/// `num_classes` values (or more, once a self-model head is attached via
/// [`crate::selfmodel::augment_head`]).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSpec {
    pub input_dim: usize,
    pub hidden_dims: Vec<usize>,
    pub num_classes: usize,
    #[serde(default)]
    pub activation: Activation,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub front_end: Option<EmbeddingSpec>,
    /// Extra output rows appended after the class logits (self-model head).
    #[serde(default, skip_serializing_if = "is_zero")]
    pub aux_outputs: usize,
    #[serde(default)]
    pub seed: u64,
}

fn is_zero(v: &usize) -> bool {
    *v == 0
}

impl NetworkSpec {
    pub fn mlp(input_dim: usize, hidden_dims: Vec<usize>, num_classes: usize, seed: u64) -> Self {
        Self {
            input_dim,
            hidden_dims,
            num_classes,
            activation: Activation::Relu,
            front_end: None,
            aux_outputs: 0,
            seed,
        }
    }

    pub fn with_embedding(
        vocab_size: usize,
        embed_dim: usize,
        hidden_dims: Vec<usize>,
        num_classes: usize,
        seed: u64,
    ) -> Self {
        Self {
            input_dim: embed_dim,
            hidden_dims,
            num_classes,
            activation: Activation::Relu,
            front_end: Some(EmbeddingSpec { vocab_size, embed_dim, pooling: Pooling::Mean }),
            aux_outputs: 0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 {
            return Err(config_err("input_dim must be positive"));
        }
        if self.hidden_dims.is_empty() {
            return Err(config_err("hidden_dims must contain at least one layer"));
        }
        if let Some(i) = self.hidden_dims.iter().position(|&d| d == 0) {
            return Err(config_err(format!("hidden layer {i} has zero width")));
        }
        if self.num_classes == 0 {
            return Err(config_err("num_classes must be positive"));
        }
        if let Some(fe) = &self.front_end {
            if fe.embed_dim == 0 {
                return Err(config_err("embed_dim must be positive"));
            }
            if fe.vocab_size < 3 {
                return Err(config_err("vocab_size must reserve padding and OOV indices (>= 3)"));
            }
            if fe.embed_dim != self.input_dim {
                return Err(config_err(format!(
                    "input_dim {} must equal embed_dim {} with an embedding front end",
                    self.input_dim, fe.embed_dim
                )));
            }
        }
        Ok(())
    }

    /// Width of the final layer: class logits plus any auxiliary rows.
    pub fn output_dim(&self) -> usize {
        self.num_classes + self.aux_outputs
    }

    pub fn num_hidden(&self) -> usize {
        self.hidden_dims.len()
    }

    /// `(fan_in, fan_out)` for every dense layer, output layer last.
    pub fn layer_dims(&self) -> Vec<(usize, usize)> {
        let mut dims = Vec::with_capacity(self.hidden_dims.len() + 1);
        let mut fan_in = self.input_dim;
        for &h in &self.hidden_dims {
            dims.push((fan_in, h));
            fan_in = h;
        }
        dims.push((fan_in, self.output_dim()));
        dims
    }

    pub fn num_params(&self) -> usize {
        let dense: usize = self.layer_dims().iter().map(|&(i, o)| i * o + o).sum();
        dense + self.front_end.as_ref().map_or(0, |fe| fe.vocab_size * fe.embed_dim)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_dims() {
        assert!(NetworkSpec::mlp(784, vec![], 10, 0).validate().is_err());
        assert!(NetworkSpec::mlp(784, vec![64, 0], 10, 0).validate().is_err());
        assert!(NetworkSpec::mlp(0, vec![64], 10, 0).validate().is_err());
        let mut s = NetworkSpec::with_embedding(100, 16, vec![8], 2, 0);
        s.validate().unwrap();
        s.input_dim = 15;
        assert!(s.validate().is_err());
    }

    #[test]
    fn layer_dims_chain() {
        let s = NetworkSpec::mlp(784, vec![512], 10, 0);
        assert_eq!(s.layer_dims(), vec![(784, 512), (512, 10)]);
        assert_eq!(s.num_params(), 784 * 512 + 512 + 512 * 10 + 10);
    }
}
