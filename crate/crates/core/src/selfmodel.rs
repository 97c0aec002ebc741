//! Self-modeling auxiliary task.
//!
//! The output layer is widened so that, next to the class logits, it predicts
//! the post-activation values of selected hidden layers from the same forward
//! pass. Those activations are the regression target `a`; the predictions are
//! `a_hat`. The joint objective is
//!
//! ```text
//! L = w_c * CE(logits, labels) + (w_s / n) * mean_batch |a_hat - a|^2
//! ```
//!
//! with `n` the total width of the targeted layers. Both `a_hat` and `a`
//! depend on the weights and both receive gradient: [`joint_loss`] returns a
//! seed for the output layer and a seed for the targets, and the latter is fed
//! back into the hidden layers through [`crate::nn::backward`].

use std::collections::HashSet;

use ndarray::{s, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{config_err, shape_err, Error, Result};
use crate::nn::{cross_entropy, mse, Dense, ForwardTrace, Network, NetworkSpec};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelfModelConfig {
    /// Hidden-layer indices whose activations form the target, in order.
    pub target_layers: Vec<usize>,
    /// Weight on the classification loss.
    #[serde(default = "one")]
    pub w_c: f64,
    /// Weight on the self-model loss (the auxiliary weight).
    pub w_s: f64,
}

fn one() -> f64 {
    1.0
}

impl SelfModelConfig {
    pub fn baseline() -> Self {
        Self { target_layers: Vec::new(), w_c: 1.0, w_s: 0.0 }
    }

    pub fn new(target_layers: Vec<usize>, w_s: f64) -> Self {
        Self { target_layers, w_c: 1.0, w_s }
    }

    pub fn is_baseline(&self) -> bool {
        self.target_layers.is_empty() && self.w_s == 0.0
    }

    pub fn validate(&self, spec: &NetworkSpec) -> Result<()> {
        if !(self.w_c >= 0.0 && self.w_c.is_finite() && self.w_s >= 0.0 && self.w_s.is_finite()) {
            return Err(config_err(format!(
                "loss weights must be finite and nonnegative (w_c={}, w_s={})",
                self.w_c, self.w_s
            )));
        }
        let mut seen = HashSet::new();
        for &l in &self.target_layers {
            if l >= spec.num_hidden() {
                return Err(config_err(format!(
                    "target layer {l} out of range for {} hidden layers",
                    spec.num_hidden()
                )));
            }
            if !seen.insert(l) {
                return Err(config_err(format!("target layer {l} listed twice")));
            }
        }
        if self.w_s > 0.0 && self.target_layers.is_empty() {
            return Err(config_err("w_s > 0 requires at least one target layer"));
        }
        Ok(())
    }
}

/// Contiguous run of auxiliary output rows predicting one hidden layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeadSegment {
    pub layer: usize,
    /// Offset within the auxiliary block (not counting class rows).
    pub offset: usize,
    pub width: usize,
}

/// Layout of an augmented output layer: class rows first, then one segment
/// per target layer in declared order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AugmentedHead {
    pub num_classes: usize,
    pub aux_width: usize,
    pub segments: Vec<HeadSegment>,
}

impl AugmentedHead {
    /// Layout for a network with no self-model rows.
    pub fn none(num_classes: usize) -> Self {
        Self { num_classes, aux_width: 0, segments: Vec::new() }
    }

    pub fn output_width(&self) -> usize {
        self.num_classes + self.aux_width
    }

    /// Split a `batch x n` target gradient into per-layer pieces for
    /// [`crate::nn::backward`].
    pub fn split_target_grads<'a, F: Scalar>(
        &self,
        dtarget: &'a Array2<F>,
    ) -> Vec<(usize, ArrayView2<'a, F>)> {
        self.segments
            .iter()
            .map(|seg| (seg.layer, dtarget.slice(s![.., seg.offset..seg.offset + seg.width])))
            .collect()
    }
}

/// Widen the output layer of `spec` for the self-model task.
pub fn augment_head(spec: &NetworkSpec, cfg: &SelfModelConfig) -> Result<(NetworkSpec, AugmentedHead)> {
    spec.validate()?;
    cfg.validate(spec)?;
    if spec.aux_outputs != 0 {
        return Err(config_err("spec already carries auxiliary outputs"));
    }
    let mut segments = Vec::with_capacity(cfg.target_layers.len());
    let mut offset = 0;
    for &layer in &cfg.target_layers {
        let width = spec.hidden_dims[layer];
        segments.push(HeadSegment { layer, offset, width });
        offset += width;
    }
    let head = AugmentedHead { num_classes: spec.num_classes, aux_width: offset, segments };
    let augmented = NetworkSpec { aux_outputs: offset, ..spec.clone() };
    Ok((augmented, head))
}

/// Concatenate the live activations of the target layers, `batch x n`.
pub fn collect_targets<F: Scalar>(trace: &ForwardTrace<F>, head: &AugmentedHead) -> Result<Array2<F>> {
    let views: Vec<ArrayView2<'_, F>> = head
        .segments
        .iter()
        .map(|seg| {
            trace
                .activations
                .get(seg.layer)
                .map(|a| a.view())
                .ok_or_else(|| shape_err(format!("trace has no hidden layer {}", seg.layer)))
        })
        .collect::<Result<_>>()?;
    if views.is_empty() {
        return Ok(Array2::zeros((trace.batch_size(), 0)));
    }
    ndarray::concatenate(Axis(1), &views).map_err(|e| shape_err(e.to_string()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointLossBreakdown {
    pub total: f64,
    pub classification: f64,
    pub self_model: f64,
    pub w_c: f64,
    pub w_s: f64,
}

/// Gradient seeds produced by [`joint_loss`].
#[derive(Debug, Clone)]
pub struct JointGrads<F> {
    /// Gradient with respect to the full output layer (classes and `a_hat`).
    pub output: Array2<F>,
    /// Gradient with respect to the target activations `a`.
    pub targets: Array2<F>,
}

pub fn joint_loss<F: Scalar>(
    head_out: ArrayView2<'_, F>,
    labels: &[usize],
    targets: ArrayView2<'_, F>,
    head: &AugmentedHead,
    cfg: &SelfModelConfig,
) -> Result<(JointLossBreakdown, JointGrads<F>)> {
    if head_out.ncols() != head.output_width() {
        return Err(shape_err(format!(
            "output width {} does not match head layout {}",
            head_out.ncols(),
            head.output_width()
        )));
    }
    if targets.dim() != (head_out.nrows(), head.aux_width) {
        return Err(shape_err(format!(
            "targets {:?} do not match batch {} x aux width {}",
            targets.dim(),
            head_out.nrows(),
            head.aux_width
        )));
    }
    let w_c = F::from_f64_lossy(cfg.w_c);
    let w_s = F::from_f64_lossy(cfg.w_s);
    let classes = head.num_classes;
    let (ce, dlogits) = cross_entropy(head_out.slice(s![.., ..classes]), labels)?;

    let mut output = Array2::<F>::zeros(head_out.dim());
    output.slice_mut(s![.., ..classes]).assign(&dlogits.mapv(|g| g * w_c));
    let (self_model, dtargets) = if head.aux_width == 0 {
        (F::zero(), Array2::zeros(targets.dim()))
    } else {
        let (l, dpred, dtarget) = mse(head_out.slice(s![.., classes..]), targets)?;
        output.slice_mut(s![.., classes..]).assign(&dpred.mapv(|g| g * w_s));
        (l, dtarget.mapv(|g| g * w_s))
    };
    let classification = ce.to_f64_lossy();
    let self_model = self_model.to_f64_lossy();
    let breakdown = JointLossBreakdown {
        total: cfg.w_c * classification + cfg.w_s * self_model,
        classification,
        self_model,
        w_c: cfg.w_c,
        w_s: cfg.w_s,
    };
    Ok((breakdown, JointGrads { output, targets: dtargets }))
}

/// Drop the self-model rows, leaving a classification-only network with
/// every other parameter untouched.
pub fn prune_head<F: Scalar>(net: &Network<F>, head: &AugmentedHead) -> Result<Network<F>> {
    let out = net.output_layer();
    if out.fan_out() != head.output_width()
        || net.spec.num_classes != head.num_classes
        || net.spec.aux_outputs != head.aux_width
    {
        return Err(Error::Config(format!(
            "head layout ({} classes + {} aux) does not match network output width {}",
            head.num_classes,
            head.aux_width,
            out.fan_out()
        )));
    }
    let mut pruned = net.clone();
    if head.aux_width == 0 {
        return Ok(pruned);
    }
    let last = pruned.layers.last_mut().expect("validated networks have an output layer");
    *last = Dense {
        weights: out.weights.slice(s![..head.num_classes, ..]).to_owned(),
        biases: out.biases.slice(s![..head.num_classes]).to_owned(),
    };
    pruned.spec.aux_outputs = 0;
    Ok(pruned)
}
