//! Success detectors: scalar sigmoid classifiers over 32x32 renders that
//! predict "the terminal reward is coming from here" and gate pipeline
//! stage transitions.

use crate::arch::{detector_head_spec, selector_conv_spec};
use crate::convnet::{eval_loss, train_batch, ConvHeadModel, TrainItem, TrainState};
use crate::dataset::DatasetError;
use serde::{Deserialize, Serialize};
use toolforge_core::raster::DepthRaster;
use toolforge_core::rng::DetRng;
use toolforge_neuro::{LossKind, Tensor};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DetectorKind {
    Grasp,
    Manipulation,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DetectorModel {
    pub net: ConvHeadModel,
    pub kind: DetectorKind,
}

impl DetectorModel {
    pub fn new(kind: DetectorKind, seed: u64) -> Self {
        Self { net: ConvHeadModel::new(selector_conv_spec(), detector_head_spec(), 0, seed), kind }
    }

    /// Success-from-here probability in (0, 1).
    pub fn predict(&self, frame: &DepthRaster) -> f64 {
        self.net.predict(&ConvHeadModel::patch_tensor(frame), &[]).data[0] as f64
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct DetectorTrainConfig {
    pub epochs: usize,
    pub lr: f64,
    pub batch_size: usize,
    pub holdout_frac: f64,
    pub seed: u64,
}

impl Default for DetectorTrainConfig {
    fn default() -> Self {
        Self { epochs: 4, lr: 1e-3, batch_size: 32, holdout_frac: 0.2, seed: 0 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DetectorReport {
    pub train_loss: f64,
    pub holdout_loss: f64,
    pub holdout_accuracy: f64,
    pub train_count: usize,
    pub holdout_count: usize,
}

/// BCE training on (frame, success-from-here) pairs with a held-out split.
pub fn train_detector(
    frames: &[(DepthRaster, bool)],
    kind: DetectorKind,
    cfg: &DetectorTrainConfig,
) -> Result<(DetectorModel, DetectorReport), DatasetError> {
    let positives = frames.iter().filter(|(_, l)| *l).count();
    if frames.is_empty() || positives == 0 || positives == frames.len() {
        return Err(DatasetError::Degenerate(positives > 0));
    }
    let items: Vec<TrainItem> = frames
        .iter()
        .map(|(raster, label)| TrainItem {
            patch: ConvHeadModel::patch_tensor(raster),
            extra: Vec::new(),
            target: Tensor::from_vec(&[1], vec![if *label { 1.0 } else { 0.0 }]),
        })
        .collect();

    let mut rng = DetRng::keyed(&[cfg.seed, 0xDE7E]);
    let order = rng.permutation(items.len());
    let holdout_n = ((items.len() as f64 * cfg.holdout_frac) as usize).max(1);
    let (holdout_idx, train_idx) = order.split_at(holdout_n);

    let mut model = DetectorModel::new(kind, cfg.seed);
    let mut state = TrainState::new(&model.net);
    let mut train_loss = f64::NAN;
    for epoch in 0..cfg.epochs {
        let mut epoch_rng = DetRng::keyed(&[cfg.seed, 0xE14D, epoch as u64]);
        let mut shuffled = train_idx.to_vec();
        for i in (1..shuffled.len()).rev() {
            let j = epoch_rng.index(i + 1);
            shuffled.swap(i, j);
        }
        let mut last = 0.0;
        for chunk in shuffled.chunks(cfg.batch_size) {
            let batch: Vec<&TrainItem> = chunk.iter().map(|&i| &items[i]).collect();
            last = train_batch(&mut model.net, &mut state, &batch, LossKind::Bce, cfg.lr);
        }
        train_loss = last;
    }

    let holdout_items: Vec<&TrainItem> = holdout_idx.iter().map(|&i| &items[i]).collect();
    let holdout_loss = eval_loss(&model.net, &holdout_items, LossKind::Bce);
    let mut correct = 0usize;
    for &i in holdout_idx {
        let p = model.predict(&DepthRaster {
            width: frames[i].0.width,
            height: frames[i].0.height,
            values: frames[i].0.values.clone(),
        });
        correct += ((p > 0.5) == frames[i].1) as usize;
    }
    let holdout_accuracy = correct as f64 / holdout_idx.len() as f64;

    Ok((
        model,
        DetectorReport {
            train_loss,
            holdout_loss,
            holdout_accuracy,
            train_count: train_idx.len(),
            holdout_count: holdout_idx.len(),
        },
    ))
}
