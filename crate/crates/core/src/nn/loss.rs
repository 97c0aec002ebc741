use ndarray::{Array2, ArrayView2, Axis};

use crate::error::{shape_err, Error, Result};
use crate::scalar::Scalar;

/// Row-wise softmax with max subtraction.
pub fn softmax<F: Scalar>(logits: ArrayView2<'_, F>) -> Array2<F> {
    let mut out = logits.to_owned();
    for mut row in out.axis_iter_mut(Axis(0)) {
        let max = row.iter().copied().fold(F::neg_infinity(), F::max);
        row.mapv_inplace(|v| (v - max).exp());
        let sum: F = row.iter().copied().sum();
        row /= sum;
    }
    out
}

/// Mean negative log-likelihood of `labels` under softmax(`logits`), plus its
/// gradient `(softmax - onehot) / batch`.
pub fn cross_entropy<F: Scalar>(logits: ArrayView2<'_, F>, labels: &[usize]) -> Result<(F, Array2<F>)> {
    let (batch, classes) = logits.dim();
    if batch == 0 {
        return Err(shape_err("cross entropy over an empty batch"));
    }
    if labels.len() != batch {
        return Err(shape_err(format!("{} labels for a batch of {batch}", labels.len())));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= classes) {
        return Err(Error::Data(format!("label {bad} outside [0, {classes})")));
    }
    let scale = F::from_usize_lossy(batch).recip();
    let mut grad = Array2::<F>::zeros((batch, classes));
    let mut total = F::zero();
    for ((row, mut g), &label) in logits.axis_iter(Axis(0)).zip(grad.axis_iter_mut(Axis(0))).zip(labels) {
        let max = row.iter().copied().fold(F::neg_infinity(), F::max);
        let mut sum = F::zero();
        for (gv, &v) in g.iter_mut().zip(row.iter()) {
            *gv = (v - max).exp();
            sum += *gv;
        }
        // -log softmax[label] = log-sum-exp - logit[label]
        total += sum.ln() + max - row[label];
        g.mapv_inplace(|e| e / sum * scale);
        g[label] -= scale;
    }
    Ok((total * scale, grad))
}

/// Self-model regression loss: batch mean of `(1/n) * sum (pred - target)^2`
/// with `n` the row width. Returns gradients for both arguments.
pub fn mse<F: Scalar>(
    pred: ArrayView2<'_, F>,
    target: ArrayView2<'_, F>,
) -> Result<(F, Array2<F>, Array2<F>)> {
    if pred.dim() != target.dim() {
        return Err(shape_err(format!("mse of {:?} against {:?}", pred.dim(), target.dim())));
    }
    let (batch, width) = pred.dim();
    if batch == 0 || width == 0 {
        return Err(shape_err("mse over an empty matrix"));
    }
    let diff = &pred - &target;
    let norm = F::from_usize_lossy(batch * width).recip();
    let loss = diff.iter().map(|&d| d * d).sum::<F>() * norm;
    let two = F::one() + F::one();
    let dpred = diff.mapv(|d| two * d * norm);
    let dtarget = dpred.mapv(|d| -d);
    Ok((loss, dpred, dtarget))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;

    #[test]
    fn uniform_logits_give_ln_classes() {
        let logits = Array2::<f64>::zeros((3, 10));
        let (loss, _) = cross_entropy(logits.view(), &[0, 4, 9]).unwrap();
        assert!((loss - 10f64.ln()).abs() < 1e-12);
        assert!((loss - 2.302585).abs() < 1e-6);
    }

    #[test]
    fn saturated_logits_give_zero_loss() {
        let logits: Array2<f64> = array![[1e9, 0.0, 0.0]];
        let (loss, grad) = cross_entropy(logits.view(), &[0]).unwrap();
        assert!(loss.abs() < 1e-12);
        assert!(grad.iter().all(|g| g.abs() < 1e-12));
    }

    #[test]
    fn two_class_hand_value() {
        let (loss, grad) = cross_entropy(array![[1.0, 0.0]].view(), &[0]).unwrap();
        let expected = (1.0 + (-1.0f64).exp()).ln();
        assert!((loss - expected).abs() < 1e-15);
        assert!((loss - 0.313262).abs() < 1e-6);
        let p0 = 1.0 / (1.0 + (-1.0f64).exp());
        assert!((grad[[0, 0]] - (p0 - 1.0)).abs() < 1e-15);
        assert!((grad[[0, 1]] - (1.0 - p0)).abs() < 1e-15);
    }

    #[test]
    fn label_out_of_range() {
        let r = cross_entropy(Array2::<f64>::zeros((1, 3)).view(), &[3]);
        assert!(matches!(r, Err(Error::Data(_))));
    }

    #[test]
    fn mse_cases() {
        let (l, dp, dt) = mse(array![[1.0, 2.0]].view(), array![[1.0, 2.0]].view()).unwrap();
        assert_eq!(l, 0.0);
        assert!(dp.iter().chain(dt.iter()).all(|&v| v == 0.0));
        let (l, _, _) = mse(array![[2.0, 0.0]].view(), array![[0.0, 0.0]].view()).unwrap();
        assert_eq!(l, 2.0);
        assert!(mse(array![[2.0, 0.0]].view(), array![[0.0]].view()).is_err());
    }

    proptest! {
        #[test]
        fn softmax_rows_sum_to_one(vals in proptest::collection::vec(-50.0f64..50.0, 12)) {
            let logits = Array2::from_shape_vec((3, 4), vals).unwrap();
            let p = softmax(logits.view());
            for row in p.axis_iter(Axis(0)) {
                prop_assert!((row.sum() - 1.0).abs() <= 1e-12);
            }
            let (loss, _) = cross_entropy(logits.view(), &[0, 1, 3]).unwrap();
            prop_assert!(loss >= 0.0);
        }

        #[test]
        fn mse_target_grad_is_negated(vals in proptest::collection::vec(-5.0f64..5.0, 16)) {
            let pred = Array2::from_shape_vec((2, 4), vals[..8].to_vec()).unwrap();
            let target = Array2::from_shape_vec((2, 4), vals[8..].to_vec()).unwrap();
            let (loss, dp, dt) = mse(pred.view(), target.view()).unwrap();
            prop_assert!(loss >= 0.0);
            for (a, b) in dp.iter().zip(dt.iter()) {
                prop_assert_eq!(*a, -*b);
            }
        }
    }
}
