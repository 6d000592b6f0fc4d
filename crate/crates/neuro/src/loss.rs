//! Loss functions: mean squared error and binary cross-entropy.
//! Loss values accumulate in f64; gradients come back in the storage scalar.

use crate::tensor::Tensor;
use serde::{Deserialize, Serialize};
use toolforge_core::scalar::Scalar;

pub const BCE_CLAMP: f64 = 1e-7;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LossKind {
    Mse,
    Bce,
}

pub fn loss<S: Scalar>(kind: LossKind, pred: &Tensor<S>, target: &Tensor<S>) -> (f64, Tensor<S>) {
    match kind {
        LossKind::Mse => mse(pred, target),
        LossKind::Bce => bce(pred, target),
    }
}

/// Mean squared error: L = mean((p - t)^2), dL/dp = 2 (p - t) / N.
pub fn mse<S: Scalar>(pred: &Tensor<S>, target: &Tensor<S>) -> (f64, Tensor<S>) {
    assert_eq!(pred.shape, target.shape, "mse shapes must match");
    let n = pred.len() as f64;
    let mut acc = 0.0f64;
    let mut grad = Tensor::zeros(&pred.shape);
    for i in 0..pred.len() {
        let d = pred.data[i].f64() - target.data[i].f64();
        acc += d * d;
        grad.data[i] = S::c(2.0 * d / n);
    }
    (acc / n, grad)
}

/// Binary cross-entropy with log arguments clamped at 1e-7. The gradient is
/// the exact derivative of the clamped loss: zero where the clamp is active.
pub fn bce<S: Scalar>(pred: &Tensor<S>, target: &Tensor<S>) -> (f64, Tensor<S>) {
    assert_eq!(pred.shape, target.shape, "bce shapes must match");
    let n = pred.len() as f64;
    let mut acc = 0.0f64;
    let mut grad = Tensor::zeros(&pred.shape);
    for i in 0..pred.len() {
        let p_raw = pred.data[i].f64();
        let t = target.data[i].f64();
        let p = p_raw.clamp(BCE_CLAMP, 1.0 - BCE_CLAMP);
        acc -= t * p.ln() + (1.0 - t) * (1.0 - p).ln();
        let active = p_raw > BCE_CLAMP && p_raw < 1.0 - BCE_CLAMP;
        grad.data[i] = if active { S::c((p - t) / (p * (1.0 - p) * n)) } else { S::zero() };
    }
    (acc / n, grad)
}
