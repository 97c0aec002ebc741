use ndarray::{Array1, Array2};
use rand_distr::{Distribution, Uniform};

use super::spec::NetworkSpec;
use crate::error::{Error, ParamLocation, Result};
use crate::rng::{stream_rng, streams};
use crate::scalar::Scalar;

/// One affine map; `weights` is `out x in`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense<F> {
    pub weights: Array2<F>,
    pub biases: Array1<F>,
}

impl<F: Scalar> Dense<F> {
    pub fn zeros(fan_in: usize, fan_out: usize) -> Self {
        Self { weights: Array2::zeros((fan_out, fan_in)), biases: Array1::zeros(fan_out) }
    }

    pub fn fan_in(&self) -> usize {
        self.weights.ncols()
    }

    pub fn fan_out(&self) -> usize {
        self.weights.nrows()
    }

    fn num_params(&self) -> usize {
        self.weights.len() + self.biases.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network<F> {
    pub spec: NetworkSpec,
    /// Hidden layers followed by the output layer.
    pub layers: Vec<Dense<F>>,
    /// `vocab_size x embed_dim`, present iff the spec has a front end.
    pub embedding: Option<Array2<F>>,
}

/// Build a freshly initialized network.
///
/// Dense weights are He-normal (`std = sqrt(2 / fan_in)`), embeddings are
/// uniform on `(-0.05, 0.05)`, and biases start at zero. Each layer draws from
/// its own counter stream so the result depends only on `spec`.
pub fn init_network<F: Scalar>(spec: &NetworkSpec) -> Result<Network<F>> {
    spec.validate()?;
    let layers = spec
        .layer_dims()
        .into_iter()
        .enumerate()
        .map(|(i, (fan_in, fan_out))| {
            let mut rng = stream_rng(spec.seed, streams::INIT_DENSE, i as u64);
            let std = F::from_f64_lossy((2.0 / fan_in as f64).sqrt());
            let weights =
                Array2::from_shape_simple_fn((fan_out, fan_in), || F::standard_normal(&mut rng) * std);
            Dense { weights, biases: Array1::zeros(fan_out) }
        })
        .collect();
    let embedding = spec.front_end.as_ref().map(|fe| {
        let mut rng = stream_rng(spec.seed, streams::INIT_EMBEDDING, 0);
        let dist = Uniform::new(-0.05f64, 0.05).expect("valid uniform bounds");
        Array2::from_shape_simple_fn((fe.vocab_size, fe.embed_dim), || {
            F::from_f64_lossy(dist.sample(&mut rng))
        })
    });
    Ok(Network { spec: spec.clone(), layers, embedding })
}

impl<F: Scalar> Network<F> {
    /// Network with every parameter zero; mostly useful in tests.
    pub fn zeros(spec: &NetworkSpec) -> Result<Self> {
        spec.validate()?;
        let layers = spec.layer_dims().into_iter().map(|(i, o)| Dense::zeros(i, o)).collect();
        let embedding = spec.front_end.as_ref().map(|fe| Array2::zeros((fe.vocab_size, fe.embed_dim)));
        Ok(Self { spec: spec.clone(), layers, embedding })
    }

    pub fn output_layer(&self) -> &Dense<F> {
        self.layers.last().expect("validated networks have an output layer")
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(Dense::num_params).sum::<usize>()
            + self.embedding.as_ref().map_or(0, |e| e.len())
    }

    /// Check that shapes agree with the spec and every value is finite.
    pub fn check(&self) -> Result<()> {
        let dims = self.spec.layer_dims();
        if dims.len() != self.layers.len() {
            return Err(Error::Shape(format!(
                "spec describes {} dense layers, network holds {}",
                dims.len(),
                self.layers.len()
            )));
        }
        for (i, (layer, &(fan_in, fan_out))) in self.layers.iter().zip(&dims).enumerate() {
            if layer.weights.dim() != (fan_out, fan_in) || layer.biases.len() != fan_out {
                return Err(Error::Shape(format!(
                    "layer {i}: expected {fan_out}x{fan_in}, found {:?}",
                    layer.weights.dim()
                )));
            }
            if !layer.weights.iter().chain(layer.biases.iter()).all(|v| v.is_finite()) {
                return Err(Error::Divergence { location: ParamLocation::Dense(i) });
            }
        }
        match (&self.spec.front_end, &self.embedding) {
            (None, None) => {}
            (Some(fe), Some(table)) => {
                if table.dim() != (fe.vocab_size, fe.embed_dim) {
                    return Err(Error::Shape(format!(
                        "embedding table {:?} does not match {}x{}",
                        table.dim(),
                        fe.vocab_size,
                        fe.embed_dim
                    )));
                }
                if !table.iter().all(|v| v.is_finite()) {
                    return Err(Error::Divergence { location: ParamLocation::Embedding });
                }
            }
            _ => return Err(Error::Shape("embedding table presence disagrees with spec".into())),
        }
        Ok(())
    }

    /// Parameters in canonical order: embedding (row-major), then for each
    /// dense layer its weights (row-major) followed by its biases.
    pub fn params_flat(&self) -> Vec<F> {
        let mut out = Vec::with_capacity(self.num_params());
        if let Some(e) = &self.embedding {
            out.extend(e.iter().copied());
        }
        for layer in &self.layers {
            out.extend(layer.weights.iter().copied());
            out.extend(layer.biases.iter().copied());
        }
        out
    }

    /// Inverse of [`Network::params_flat`].
    pub fn set_params_flat(&mut self, flat: &[F]) -> Result<()> {
        if flat.len() != self.num_params() {
            return Err(Error::Shape(format!(
                "flat parameter vector has {} entries, network has {}",
                flat.len(),
                self.num_params()
            )));
        }
        let mut rest = flat;
        let mut take = |dst: &mut dyn Iterator<Item = &mut F>, n: usize| {
            let (head, tail) = rest.split_at(n);
            for (d, &s) in dst.zip(head) {
                *d = s;
            }
            rest = tail;
        };
        if let Some(e) = &mut self.embedding {
            let n = e.len();
            take(&mut e.iter_mut(), n);
        }
        for layer in &mut self.layers {
            let n = layer.weights.len();
            take(&mut layer.weights.iter_mut(), n);
            let n = layer.biases.len();
            take(&mut layer.biases.iter_mut(), n);
        }
        Ok(())
    }

    /// Copy into another precision.
    pub fn cast<G: Scalar>(&self) -> Network<G> {
        let conv = |v: &F| G::from_f64_lossy(v.to_f64_lossy());
        Network {
            spec: self.spec.clone(),
            layers: self
                .layers
                .iter()
                .map(|l| Dense { weights: l.weights.map(conv), biases: l.biases.map(conv) })
                .collect(),
            embedding: self.embedding.as_ref().map(|e| e.map(conv)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_gives_identical_bytes() {
        let spec = NetworkSpec::mlp(20, vec![8, 4], 3, 7);
        let a: Network<f64> = init_network(&spec).unwrap();
        let b: Network<f64> = init_network(&spec).unwrap();
        let bits = |n: &Network<f64>| n.params_flat().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
        let c: Network<f64> = init_network(&NetworkSpec { seed: 8, ..spec }).unwrap();
        assert_ne!(bits(&a), bits(&c));
    }

    #[test]
    fn mnist_layer_shapes() {
        let net: Network<f64> = init_network(&NetworkSpec::mlp(784, vec![512], 10, 1)).unwrap();
        assert_eq!(net.layers[0].weights.dim(), (512, 784));
        assert_eq!(net.layers[1].weights.dim(), (10, 512));
        assert!(net.layers.iter().all(|l| l.biases.iter().all(|&b| b == 0.0)));
    }

    #[test]
    fn deep_variant_widths() {
        let net: Network<f32> =
            init_network(&NetworkSpec::mlp(784, vec![2000, 1000, 1000, 500, 20], 10, 1)).unwrap();
        let widths: Vec<usize> = net.layers.iter().map(Dense::fan_out).collect();
        assert_eq!(widths, vec![2000, 1000, 1000, 500, 20, 10]);
    }

    #[test]
    fn he_scale_is_plausible() {
        let net: Network<f64> = init_network(&NetworkSpec::mlp(400, vec![300], 10, 3)).unwrap();
        let w = &net.layers[0].weights;
        let var = w.iter().map(|v| v * v).sum::<f64>() / w.len() as f64;
        assert!((var - 2.0 / 400.0).abs() < 0.1 * 2.0 / 400.0, "var {var}");
    }

    #[test]
    fn embedding_init_range() {
        let net: Network<f64> = init_network(&NetworkSpec::with_embedding(50, 6, vec![4], 2, 1)).unwrap();
        let e = net.embedding.as_ref().unwrap();
        assert_eq!(e.dim(), (50, 6));
        assert!(e.iter().all(|v| v.abs() < 0.05));
    }

    #[test]
    fn flat_roundtrip() {
        let spec = NetworkSpec::with_embedding(10, 3, vec![4], 2, 5);
        let net: Network<f64> = init_network(&spec).unwrap();
        let flat = net.params_flat();
        let mut other = Network::<f64>::zeros(&spec).unwrap();
        other.set_params_flat(&flat).unwrap();
        assert_eq!(net, other);
        assert!(other.set_params_flat(&flat[1..]).is_err());
    }
}
