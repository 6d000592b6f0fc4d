//! Bias-corrected Adam over named tensor collections.

use crate::model::ModelWeights;
use crate::tensor::Tensor;
use serde::{Deserialize, Serialize};
use toolforge_core::scalar::Scalar;

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPSILON: f64 = 1e-8;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AdamState<S> {
    pub m: Vec<Tensor<S>>,
    pub v: Vec<Tensor<S>>,
    pub step: u64,
}

impl<S: Scalar> AdamState<S> {
    pub fn new(weights: &ModelWeights<S>) -> Self {
        Self {
            m: weights.tensors.iter().map(|(_, t)| Tensor::zeros(&t.shape)).collect(),
            v: weights.tensors.iter().map(|(_, t)| Tensor::zeros(&t.shape)).collect(),
            step: 0,
        }
    }
}

/// One Adam step in place. Gradients must be name/shape aligned with the
/// weights (as produced by `backward`). Moments and updates accumulate in
/// f64 and round back to the storage scalar.
pub fn adam_update<S: Scalar>(
    weights: &mut ModelWeights<S>,
    grads: &ModelWeights<S>,
    state: &mut AdamState<S>,
    lr: f64,
) {
    assert_eq!(weights.tensors.len(), grads.tensors.len(), "weights/grads misaligned");
    state.step += 1;
    let t = state.step as i32;
    let bc1 = 1.0 - BETA1.powi(t);
    let bc2 = 1.0 - BETA2.powi(t);
    for k in 0..weights.tensors.len() {
        debug_assert_eq!(weights.tensors[k].0, grads.tensors[k].0);
        let w = &mut weights.tensors[k].1;
        let g = &grads.tensors[k].1;
        let m = &mut state.m[k];
        let v = &mut state.v[k];
        for i in 0..w.data.len() {
            let gi = g.data[i].f64();
            let mi = BETA1 * m.data[i].f64() + (1.0 - BETA1) * gi;
            let vi = BETA2 * v.data[i].f64() + (1.0 - BETA2) * gi * gi;
            m.data[i] = S::c(mi);
            v.data[i] = S::c(vi);
            let m_hat = mi / bc1;
            let v_hat = vi / bc2;
            w.data[i] = S::c(w.data[i].f64() - lr * m_hat / (v_hat.sqrt() + EPSILON));
        }
    }
}
