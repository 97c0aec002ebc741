//! Central finite-difference check of the reverse pass, including the
//! self-model target path.

use crate::data::Inputs;
use crate::error::Result;
use crate::nn::{backward, forward, Network};
use crate::selfmodel::{collect_targets, joint_loss, AugmentedHead, SelfModelConfig};

/// Joint loss of `net` on one batch.
pub fn joint_objective(
    net: &Network<f64>,
    inputs: &Inputs<f64>,
    labels: &[usize],
    head: &AugmentedHead,
    cfg: &SelfModelConfig,
) -> Result<f64> {
    let trace = forward(net, inputs.batch())?;
    let targets = collect_targets(&trace, head)?;
    let (breakdown, _) = joint_loss(trace.output.view(), labels, targets.view(), head, cfg)?;
    Ok(breakdown.total)
}

/// Reverse-mode gradient of [`joint_objective`], flattened.
pub fn analytic_gradient(
    net: &Network<f64>,
    inputs: &Inputs<f64>,
    labels: &[usize],
    head: &AugmentedHead,
    cfg: &SelfModelConfig,
) -> Result<Vec<f64>> {
    let trace = forward(net, inputs.batch())?;
    let targets = collect_targets(&trace, head)?;
    let (_, seeds) = joint_loss(trace.output.view(), labels, targets.view(), head, cfg)?;
    let grads = backward(net, &trace, seeds.output.view(), &head.split_target_grads(&seeds.targets))?;
    let mut flat = Vec::new();
    grads.flatten_into(&mut flat);
    Ok(flat)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub worst_index: usize,
    pub num_params: usize,
}

/// Compare every gradient component against `(f(w + h) - f(w - h)) / 2h`.
///
/// Relative error is `|a - n| / max(|a|, |n|, floor)`; the floor keeps
/// components whose true value is zero from dividing rounding noise by zero.
pub fn check_gradients(
    net: &Network<f64>,
    inputs: &Inputs<f64>,
    labels: &[usize],
    head: &AugmentedHead,
    cfg: &SelfModelConfig,
    h: f64,
    floor: f64,
) -> Result<GradCheckReport> {
    let analytic = analytic_gradient(net, inputs, labels, head, cfg)?;
    let base = net.params_flat();
    let mut probe = net.clone();
    let mut worst = (0.0, 0);
    for (i, &a) in analytic.iter().enumerate() {
        let mut w = base.clone();
        w[i] = base[i] + h;
        probe.set_params_flat(&w)?;
        let up = joint_objective(&probe, inputs, labels, head, cfg)?;
        w[i] = base[i] - h;
        probe.set_params_flat(&w)?;
        let down = joint_objective(&probe, inputs, labels, head, cfg)?;
        let numeric = (up - down) / (2.0 * h);
        let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(floor);
        if rel > worst.0 {
            worst = (rel, i);
        }
    }
    Ok(GradCheckReport { max_rel_error: worst.0, worst_index: worst.1, num_params: base.len() })
}
