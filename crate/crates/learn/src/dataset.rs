//! Selector training data: tool patches with handle-mask labels, generated
//! from builder episodes, plus the on-disk format.

use crate::arch::Role;
use crate::builder::BuilderArtifact;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use toolforge_core::build::{side_patch, MdpConfig};
use toolforge_core::io::{
    bytes_to_f32s, f32s_to_bytes, read_envelope, write_envelope, EnvelopeError,
};
use toolforge_core::raster::{DepthRaster, MaskRaster, PATCH_RESOLUTION};
use toolforge_core::rng::DetRng;
use toolforge_core::tasks::{TaskKind, TaskSpec};
use toolforge_core::tool::WristSide;

pub const DATASET_MAGIC: &[u8; 8] = b"TFDATA01";
pub const DATASET_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("degenerate dataset: all samples share label {0}")]
    Degenerate(bool),
    #[error(transparent)]
    Envelope(#[from] EnvelopeError),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SelectorSample {
    pub patch: DepthRaster,
    pub mask: MaskRaster,
    pub success: bool,
    pub role: Role,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct SelectorDataset {
    pub samples: Vec<SelectorSample>,
}

impl SelectorDataset {
    /// (successes, failures).
    pub fn class_balance(&self) -> (usize, usize) {
        let s = self.samples.iter().filter(|x| x.success).count();
        (s, self.samples.len() - s)
    }

    pub fn is_degenerate(&self) -> bool {
        let (s, f) = self.class_balance();
        s == 0 || f == 0
    }
}

/// Roles a task's tool chains play, per wrist side.
pub fn task_roles(kind: TaskKind) -> Vec<(WristSide, Role)> {
    match kind {
        TaskKind::Sweeping => {
            vec![(WristSide::Left, Role::Container), (WristSide::Right, Role::Sweeper)]
        }
        TaskKind::HookAndGrasp => vec![(WristSide::Right, Role::Hook)],
        TaskKind::Decanting => vec![(WristSide::Right, Role::Decanter)],
    }
}

/// Generate labeled samples from builder episodes. A success episode labels
/// each chain patch with that chain's handle mask; a failure labels it all
/// zeros. Chains that are empty, or whose handle footprint vanishes at patch
/// resolution, are dropped (nothing for the selector to locate).
pub fn gen_selector_dataset(
    builder: &BuilderArtifact,
    spec: &TaskSpec,
    n_episodes: usize,
    seed: u64,
) -> SelectorDataset {
    let mdp = MdpConfig { seed_base: seed, ..Default::default() };
    let episodes: Vec<_> = (0..n_episodes)
        .into_par_iter()
        .map(|i| {
            let scene_seed = DetRng::keyed(&[seed, 0xDA7A, i as u64]).next_u64();
            let rec = builder.episode(spec, mdp, scene_seed, i as u64);
            let mut out = Vec::new();
            for (side, role) in task_roles(spec.kind) {
                if rec.final_tool.side_len(side) == 0 {
                    continue;
                }
                let (patch, handle_mask) = side_patch(&rec.final_tool, side);
                if rec.success && handle_mask.count_ones() == 0 {
                    continue;
                }
                let mask = if rec.success {
                    handle_mask
                } else {
                    MaskRaster::zeros(PATCH_RESOLUTION, PATCH_RESOLUTION)
                };
                out.push(SelectorSample { patch, mask, success: rec.success, role });
            }
            out
        })
        .collect();
    SelectorDataset { samples: episodes.into_iter().flatten().collect() }
}

#[derive(Serialize, Deserialize)]
struct DatasetHeader {
    count: usize,
    raster_dims: usize,
    roles: Vec<Role>,
    successes: Vec<bool>,
}

/// Dataset file: JSON header {count, raster_dims, roles, successes} plus a
/// contiguous f32 payload of patch then mask per sample.
pub fn dataset_to_bytes(ds: &SelectorDataset) -> Vec<u8> {
    let header = DatasetHeader {
        count: ds.samples.len(),
        raster_dims: PATCH_RESOLUTION,
        roles: ds.samples.iter().map(|s| s.role).collect(),
        successes: ds.samples.iter().map(|s| s.success).collect(),
    };
    let px = PATCH_RESOLUTION * PATCH_RESOLUTION;
    let mut values = Vec::with_capacity(ds.samples.len() * px * 2);
    for s in &ds.samples {
        values.extend_from_slice(&s.patch.values);
        values.extend(s.mask.values.iter().map(|&v| v as f32));
    }
    write_envelope(DATASET_MAGIC, DATASET_VERSION, &header, &f32s_to_bytes(&values))
        .expect("dataset header serializes")
}

pub fn dataset_from_bytes(bytes: &[u8]) -> Result<SelectorDataset, DatasetError> {
    let (header, payload): (DatasetHeader, _) =
        read_envelope(bytes, DATASET_MAGIC, DATASET_VERSION)?;
    let values = bytes_to_f32s(&payload)?;
    let px = header.raster_dims * header.raster_dims;
    if values.len() != header.count * px * 2
        || header.roles.len() != header.count
        || header.successes.len() != header.count
    {
        return Err(EnvelopeError::CorruptPayload(format!(
            "dataset header count {} inconsistent with payload length {}",
            header.count,
            values.len()
        ))
        .into());
    }
    let mut samples = Vec::with_capacity(header.count);
    for i in 0..header.count {
        let base = i * px * 2;
        let patch = DepthRaster {
            width: header.raster_dims,
            height: header.raster_dims,
            values: values[base..base + px].to_vec(),
        };
        let mask = MaskRaster {
            width: header.raster_dims,
            height: header.raster_dims,
            values: values[base + px..base + 2 * px].iter().map(|&v| (v != 0.0) as u8).collect(),
        };
        samples.push(SelectorSample {
            patch,
            mask,
            success: header.successes[i],
            role: header.roles[i],
        });
    }
    Ok(SelectorDataset { samples })
}
