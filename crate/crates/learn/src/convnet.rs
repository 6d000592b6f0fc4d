//! Two-stage conv+dense model shared by the selector and the detectors:
//! a conv backbone over the 32x32 patch, flattened features optionally
//! concatenated with conditioning values, then a dense head.

use crate::arch::PATCH_SIDE;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use toolforge_core::raster::DepthRaster;
use toolforge_neuro::{
    adam_update, backward, forward, AdamState, Cache, LossKind, ModelSpec, ModelWeights, Tensor,
};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConvHeadModel {
    pub conv_spec: ModelSpec,
    pub conv_w: ModelWeights<f32>,
    pub head_spec: ModelSpec,
    pub head_w: ModelWeights<f32>,
    /// Conditioning width concatenated between conv features and the head.
    pub extra_dim: usize,
}

impl ConvHeadModel {
    pub fn new(conv_spec: ModelSpec, head_spec: ModelSpec, extra_dim: usize, seed: u64) -> Self {
        let conv_w = ModelWeights::init(&conv_spec, seed);
        let head_w = ModelWeights::init(&head_spec, seed ^ 0x9E37_79B9);
        Self { conv_spec, conv_w, head_spec, head_w, extra_dim }
    }

    pub fn patch_tensor(patch: &DepthRaster) -> Tensor<f32> {
        debug_assert_eq!(patch.width, PATCH_SIDE);
        Tensor::from_vec(&[1, PATCH_SIDE, PATCH_SIDE], patch.values.clone())
    }

    /// Forward through both stages; returns the head output and the caches
    /// needed for a backward pass.
    pub fn forward(&self, patch: &Tensor<f32>, extra: &[f32]) -> (Tensor<f32>, Cache<f32>, Cache<f32>) {
        debug_assert_eq!(extra.len(), self.extra_dim);
        let conv_cache = forward(&self.conv_spec, &self.conv_w, patch).expect("patch shape fixed");
        let features = conv_cache.output();
        let mut joined = Vec::with_capacity(features.len() + extra.len());
        joined.extend_from_slice(&features.data);
        joined.extend_from_slice(extra);
        let n = joined.len();
        let head_cache = forward(&self.head_spec, &self.head_w, &Tensor::from_vec(&[n], joined))
            .expect("head shape fixed");
        (head_cache.output().clone(), conv_cache, head_cache)
    }

    pub fn predict(&self, patch: &Tensor<f32>, extra: &[f32]) -> Tensor<f32> {
        self.forward(patch, extra).0
    }

    /// Backward both stages given dL/d(head output); the conditioning slice
    /// of the joined gradient is dropped.
    pub fn backward(
        &self,
        conv_cache: &Cache<f32>,
        head_cache: &Cache<f32>,
        out_grad: &Tensor<f32>,
    ) -> (ModelWeights<f32>, ModelWeights<f32>) {
        let (head_grads, joined_grad) =
            backward(&self.head_spec, &self.head_w, head_cache, out_grad).expect("shapes align");
        let feat_len = joined_grad.len() - self.extra_dim;
        let feat_grad = Tensor::from_vec(&[feat_len], joined_grad.data[..feat_len].to_vec());
        let (conv_grads, _) =
            backward(&self.conv_spec, &self.conv_w, conv_cache, &feat_grad).expect("shapes align");
        (conv_grads, head_grads)
    }
}

/// One training sample for the shared minibatch loop.
pub struct TrainItem {
    pub patch: Tensor<f32>,
    pub extra: Vec<f32>,
    pub target: Tensor<f32>,
}

pub struct TrainState {
    pub conv_adam: AdamState<f32>,
    pub head_adam: AdamState<f32>,
}

impl TrainState {
    pub fn new(model: &ConvHeadModel) -> Self {
        Self { conv_adam: AdamState::new(&model.conv_w), head_adam: AdamState::new(&model.head_w) }
    }
}

/// One Adam minibatch step; returns the mean loss over the batch. Per-sample
/// gradients compute in parallel and reduce in sample order.
pub fn train_batch(
    model: &mut ConvHeadModel,
    state: &mut TrainState,
    batch: &[&TrainItem],
    kind: LossKind,
    lr: f64,
) -> f64 {
    let frozen = model.clone();
    let results: Vec<(f64, ModelWeights<f32>, ModelWeights<f32>)> = batch
        .par_iter()
        .map(|item| {
            let (out, conv_cache, head_cache) = frozen.forward(&item.patch, &item.extra);
            let (l, mut g) = toolforge_neuro::loss(kind, &out, &item.target);
            let scale = 1.0 / batch.len() as f32;
            for v in &mut g.data {
                *v *= scale;
            }
            let (cg, hg) = frozen.backward(&conv_cache, &head_cache, &g);
            (l, cg, hg)
        })
        .collect();

    let mut conv_total = ModelWeights::zeros_like(&model.conv_spec);
    let mut head_total = ModelWeights::zeros_like(&model.head_spec);
    let mut loss_sum = 0.0;
    for (l, cg, hg) in &results {
        loss_sum += l;
        accumulate(&mut conv_total, cg);
        accumulate(&mut head_total, hg);
    }
    adam_update(&mut model.conv_w, &conv_total, &mut state.conv_adam, lr);
    adam_update(&mut model.head_w, &head_total, &mut state.head_adam, lr);
    loss_sum / batch.len() as f64
}

fn accumulate(total: &mut ModelWeights<f32>, part: &ModelWeights<f32>) {
    for (t, (_, p)) in total.tensors.iter_mut().zip(part.tensors.iter()) {
        for (tv, pv) in t.1.data.iter_mut().zip(&p.data) {
            *tv += *pv;
        }
    }
}

/// Mean loss of the model over a sample set without updating.
pub fn eval_loss(model: &ConvHeadModel, items: &[&TrainItem], kind: LossKind) -> f64 {
    if items.is_empty() {
        return 0.0;
    }
    let total: f64 = items
        .par_iter()
        .map(|item| {
            let out = model.predict(&item.patch, &item.extra);
            toolforge_neuro::loss(kind, &out, &item.target).0
        })
        .sum();
    total / items.len() as f64
}
