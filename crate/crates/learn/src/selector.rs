//! The visual tool selector: regresses the handle mask from a tool patch,
//! conditioned on the role; its max output pixel scores candidate objects
//! and marks the grasp point.

use crate::arch::{selector_conv_spec, selector_head_spec, Role, PATCH_SIDE, ROLE_DIM};
use crate::convnet::{eval_loss, train_batch, ConvHeadModel, TrainItem, TrainState};
use crate::dataset::{DatasetError, SelectorDataset};
use serde::{Deserialize, Serialize};
use toolforge_core::raster::DepthRaster;
use toolforge_core::rng::DetRng;
use toolforge_neuro::{LossKind, Tensor};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SelectorModel {
    pub net: ConvHeadModel,
}

impl SelectorModel {
    pub fn new(seed: u64) -> Self {
        Self { net: ConvHeadModel::new(selector_conv_spec(), selector_head_spec(), ROLE_DIM, seed) }
    }

    /// Predicted mask activations as a raster in (0, 1).
    pub fn predict_mask(&self, patch: &DepthRaster, role: Role) -> DepthRaster {
        let out = self.net.predict(&ConvHeadModel::patch_tensor(patch), &role.one_hot());
        DepthRaster { width: PATCH_SIDE, height: PATCH_SIDE, values: out.data }
    }

    /// Score = max predicted pixel; grasp pixel = its (row, col), row-major
    /// first on ties.
    pub fn score_candidate(&self, patch: &DepthRaster, role: Role) -> (f64, (usize, usize)) {
        let mask = self.predict_mask(patch, role);
        let (row, col) = mask.argmax();
        (mask.get(row, col) as f64, (row, col))
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SelectorTrainConfig {
    pub epochs: usize,
    pub lr: f64,
    pub batch_size: usize,
    pub holdout_frac: f64,
    pub seed: u64,
}

impl Default for SelectorTrainConfig {
    fn default() -> Self {
        Self { epochs: 6, lr: 1e-3, batch_size: 32, holdout_frac: 0.2, seed: 0 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SelectorReport {
    pub train_loss: f64,
    pub holdout_loss: f64,
    /// Held-out success-vs-failure pairwise ranking accuracy by max pixel.
    pub ranking_accuracy: f64,
    pub train_count: usize,
    pub holdout_count: usize,
}

fn to_item(sample: &crate::dataset::SelectorSample) -> TrainItem {
    let target = Tensor::from_vec(
        &[PATCH_SIDE * PATCH_SIDE],
        sample.mask.values.iter().map(|&v| v as f32).collect(),
    );
    TrainItem {
        patch: ConvHeadModel::patch_tensor(&sample.patch),
        extra: sample.role.one_hot().to_vec(),
        target,
    }
}

/// Minibatch Adam on the l2 mask loss with a 20% held-out split. Refuses
/// single-class datasets: ranking would be vacuous.
pub fn train_selector(
    data: &SelectorDataset,
    cfg: &SelectorTrainConfig,
) -> Result<(SelectorModel, SelectorReport), DatasetError> {
    if data.samples.is_empty() || data.is_degenerate() {
        let (s, _) = data.class_balance();
        return Err(DatasetError::Degenerate(s > 0));
    }
    let mut rng = DetRng::keyed(&[cfg.seed, 0x5E1E]);
    let order = rng.permutation(data.samples.len());
    let holdout_n = ((data.samples.len() as f64 * cfg.holdout_frac) as usize).max(1);
    let (holdout_idx, train_idx) = order.split_at(holdout_n);

    let items: Vec<TrainItem> = data.samples.iter().map(to_item).collect();
    let mut model = SelectorModel::new(cfg.seed);
    let mut state = TrainState::new(&model.net);

    let mut train_loss = f64::NAN;
    for epoch in 0..cfg.epochs {
        let mut epoch_rng = DetRng::keyed(&[cfg.seed, 0xE14C, epoch as u64]);
        let mut shuffled = train_idx.to_vec();
        for i in (1..shuffled.len()).rev() {
            let j = epoch_rng.index(i + 1);
            shuffled.swap(i, j);
        }
        let mut last = 0.0;
        for chunk in shuffled.chunks(cfg.batch_size) {
            let batch: Vec<&TrainItem> = chunk.iter().map(|&i| &items[i]).collect();
            last = train_batch(&mut model.net, &mut state, &batch, LossKind::Mse, cfg.lr);
        }
        train_loss = last;
    }

    let holdout_items: Vec<&TrainItem> = holdout_idx.iter().map(|&i| &items[i]).collect();
    let holdout_loss = eval_loss(&model.net, &holdout_items, LossKind::Mse);
    let ranking_accuracy = ranking_accuracy(&model, data, holdout_idx);

    Ok((
        model,
        SelectorReport {
            train_loss,
            holdout_loss,
            ranking_accuracy,
            train_count: train_idx.len(),
            holdout_count: holdout_idx.len(),
        },
    ))
}

/// Pairwise ranking accuracy over held-out indices: a success-tool patch
/// must out-score a failure-tool patch of the same role (falls back to
/// cross-role pairs when a role lacks one of the classes).
pub fn ranking_accuracy(model: &SelectorModel, data: &SelectorDataset, idx: &[usize]) -> f64 {
    let scores: Vec<(f64, bool, Role)> = idx
        .iter()
        .map(|&i| {
            let s = &data.samples[i];
            (model.score_candidate(&s.patch, s.role).0, s.success, s.role)
        })
        .collect();
    let mut pairs = 0usize;
    let mut correct = 0usize;
    for role in Role::ALL {
        let succ: Vec<f64> =
            scores.iter().filter(|(_, ok, r)| *ok && *r == role).map(|(v, _, _)| *v).collect();
        let fail: Vec<f64> =
            scores.iter().filter(|(_, ok, r)| !*ok && *r == role).map(|(v, _, _)| *v).collect();
        for &a in &succ {
            for &b in &fail {
                pairs += 1;
                correct += (a > b) as usize;
            }
        }
    }
    if pairs == 0 {
        // No same-role pairs in the holdout: rank across roles.
        let succ: Vec<f64> = scores.iter().filter(|(_, ok, _)| *ok).map(|(v, _, _)| *v).collect();
        let fail: Vec<f64> = scores.iter().filter(|(_, ok, _)| !*ok).map(|(v, _, _)| *v).collect();
        for &a in &succ {
            for &b in &fail {
                pairs += 1;
                correct += (a > b) as usize;
            }
        }
    }
    if pairs == 0 {
        return 0.0;
    }
    correct as f64 / pairs as f64
}
