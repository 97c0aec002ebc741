use ndarray::Zip;
use serde::{Deserialize, Serialize};

use super::backward::Gradients;
use super::network::Network;
use crate::error::{shape_err, Error, ParamLocation, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Sgd,
    #[default]
    Adam,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[serde(default)]
pub struct OptimizerSettings {
    pub kind: OptimizerKind,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        Self { kind: OptimizerKind::Adam, learning_rate: 1e-3, beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }
}

impl OptimizerSettings {
    pub fn validate(&self) -> Result<()> {
        let ok = self.learning_rate > 0.0
            && self.learning_rate.is_finite()
            && (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2)
            && self.epsilon > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid optimizer settings {self:?}")))
        }
    }
}

/// Optimizer with its running state. Adam moments are allocated lazily on
/// the first step.
#[derive(Debug, Clone)]
pub struct OptimizerState<F> {
    pub settings: OptimizerSettings,
    pub step_count: u64,
    first_moment: Option<Gradients<F>>,
    second_moment: Option<Gradients<F>>,
}

impl<F: Scalar> OptimizerState<F> {
    pub fn new(settings: OptimizerSettings) -> Result<Self> {
        settings.validate()?;
        Ok(Self { settings, step_count: 0, first_moment: None, second_moment: None })
    }

    pub fn sgd(learning_rate: f64) -> Result<Self> {
        Self::new(OptimizerSettings { kind: OptimizerKind::Sgd, learning_rate, ..Default::default() })
    }

    pub fn adam(learning_rate: f64) -> Result<Self> {
        Self::new(OptimizerSettings { learning_rate, ..Default::default() })
    }

    /// Apply one update in place.
    pub fn step(&mut self, net: &mut Network<F>, grads: &Gradients<F>) -> Result<()> {
        check_congruent(net, grads)?;
        check_finite(grads)?;
        self.step_count += 1;
        let lr = F::from_f64_lossy(self.settings.learning_rate);
        match self.settings.kind {
            OptimizerKind::Sgd => {
                for_each_tensor(net, grads, |p, g| {
                    Zip::from(p).and(g).for_each(|p, &g| *p -= lr * g);
                });
            }
            OptimizerKind::Adam => {
                let s = self.settings;
                let t = self.step_count as i32;
                let b1 = F::from_f64_lossy(s.beta1);
                let b2 = F::from_f64_lossy(s.beta2);
                let eps = F::from_f64_lossy(s.epsilon);
                let c1 = F::one() - F::from_f64_lossy(s.beta1.powi(t));
                let c2 = F::one() - F::from_f64_lossy(s.beta2.powi(t));
                let m = self.first_moment.get_or_insert_with(|| Gradients::zeros_like(net));
                let v = self.second_moment.get_or_insert_with(|| Gradients::zeros_like(net));
                let one = F::one();
                let update = |p: ndarray::ArrayViewMutD<'_, F>,
                                  g: ndarray::ArrayViewD<'_, F>,
                                  m: ndarray::ArrayViewMutD<'_, F>,
                                  v: ndarray::ArrayViewMutD<'_, F>| {
                    Zip::from(p).and(g).and(m).and(v).for_each(|p, &g, m, v| {
                        *m = b1 * *m + (one - b1) * g;
                        *v = b2 * *v + (one - b2) * g * g;
                        let m_hat = *m / c1;
                        let v_hat = *v / c2;
                        *p -= lr * m_hat / (v_hat.sqrt() + eps);
                    });
                };
                if let (Some(p), Some(g), Some(mm), Some(vv)) =
                    (&mut net.embedding, &grads.embedding, &mut m.embedding, &mut v.embedding)
                {
                    update(p.view_mut().into_dyn(), g.view().into_dyn(), mm.view_mut().into_dyn(), vv.view_mut().into_dyn());
                }
                for (((p, g), mm), vv) in
                    net.layers.iter_mut().zip(&grads.layers).zip(&mut m.layers).zip(&mut v.layers)
                {
                    update(
                        p.weights.view_mut().into_dyn(),
                        g.weights.view().into_dyn(),
                        mm.weights.view_mut().into_dyn(),
                        vv.weights.view_mut().into_dyn(),
                    );
                    update(
                        p.biases.view_mut().into_dyn(),
                        g.biases.view().into_dyn(),
                        mm.biases.view_mut().into_dyn(),
                        vv.biases.view_mut().into_dyn(),
                    );
                }
            }
        }
        Ok(())
    }
}

fn for_each_tensor<F: Scalar>(
    net: &mut Network<F>,
    grads: &Gradients<F>,
    mut f: impl FnMut(ndarray::ArrayViewMutD<'_, F>, ndarray::ArrayViewD<'_, F>),
) {
    if let (Some(p), Some(g)) = (&mut net.embedding, &grads.embedding) {
        f(p.view_mut().into_dyn(), g.view().into_dyn());
    }
    for (p, g) in net.layers.iter_mut().zip(&grads.layers) {
        f(p.weights.view_mut().into_dyn(), g.weights.view().into_dyn());
        f(p.biases.view_mut().into_dyn(), g.biases.view().into_dyn());
    }
}

fn check_congruent<F: Scalar>(net: &Network<F>, grads: &Gradients<F>) -> Result<()> {
    let layers_ok = net.layers.len() == grads.layers.len()
        && net.layers.iter().zip(&grads.layers).all(|(p, g)| {
            p.weights.dim() == g.weights.dim() && p.biases.len() == g.biases.len()
        });
    let emb_ok = match (&net.embedding, &grads.embedding) {
        (None, None) => true,
        (Some(p), Some(g)) => p.dim() == g.dim(),
        _ => false,
    };
    if layers_ok && emb_ok {
        Ok(())
    } else {
        Err(shape_err("gradients are not shape-congruent with the network"))
    }
}

fn check_finite<F: Scalar>(grads: &Gradients<F>) -> Result<()> {
    if let Some(e) = &grads.embedding {
        if !e.iter().all(|v| v.is_finite()) {
            return Err(Error::Divergence { location: ParamLocation::Embedding });
        }
    }
    for (i, l) in grads.layers.iter().enumerate() {
        if !l.weights.iter().chain(l.biases.iter()).all(|v| v.is_finite()) {
            return Err(Error::Divergence { location: ParamLocation::Dense(i) });
        }
    }
    Ok(())
}
