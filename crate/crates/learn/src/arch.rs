//! The repo's network zoo: policy trunks, the mask selector, and the
//! success detectors, plus reduced-size clones of the heavy architectures
//! for finite-difference verification.

use serde::{Deserialize, Serialize};
use toolforge_neuro::{LayerSpec, ModelSpec};

/// Policy input: two 16x16 rasters flattened and concatenated.
pub const BUILDER_INPUT: usize = 2 * 16 * 16;
/// Builder heads: 5 Gaussian means + 5 log-stds + 2 Bernoulli logits.
pub const BUILDER_OUTPUT: usize = 12;
/// Motion policy input: one 16x16 raster + 3 proprioception reals.
pub const MOTION_INPUT: usize = 16 * 16 + 3;
/// Grasp heads: 3 Gaussian + 3 log-stds + grip logit.
pub const GRASP_OUTPUT: usize = 7;
/// Manipulation heads: 3 Gaussian + 3 log-stds.
pub const MANIP_OUTPUT: usize = 6;

/// Selector/detector patch input is a single-channel 32x32 raster.
pub const PATCH_SIDE: usize = 32;
/// Conv feature width after the selector backbone.
pub const CONV_FEATURES: usize = 8 * PATCH_SIDE * PATCH_SIDE;
/// Role conditioning width.
pub const ROLE_DIM: usize = 4;

/// Candidate roles a tool can be scored for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Role {
    Sweeper,
    Container,
    Hook,
    Decanter,
}

impl Role {
    pub const ALL: [Role; 4] = [Role::Sweeper, Role::Container, Role::Hook, Role::Decanter];

    pub fn one_hot(self) -> [f32; ROLE_DIM] {
        let mut v = [0.0; ROLE_DIM];
        let idx = match self {
            Role::Sweeper => 0,
            Role::Container => 1,
            Role::Hook => 2,
            Role::Decanter => 3,
        };
        v[idx] = 1.0;
        v
    }
}

fn mlp(input: usize, hidden: usize, output: usize) -> Vec<LayerSpec> {
    vec![
        LayerSpec::Dense { input, output: hidden },
        LayerSpec::ReLU,
        LayerSpec::Dense { input: hidden, output: hidden },
        LayerSpec::ReLU,
        LayerSpec::Dense { input: hidden, output },
    ]
}

/// Tool-building policy trunk.
pub fn builder_policy_spec() -> ModelSpec {
    ModelSpec::new(vec![BUILDER_INPUT], mlp(BUILDER_INPUT, 64, BUILDER_OUTPUT))
}

/// Grasping policy trunk.
pub fn grasp_policy_spec() -> ModelSpec {
    ModelSpec::new(vec![MOTION_INPUT], mlp(MOTION_INPUT, 64, GRASP_OUTPUT))
}

/// Manipulation policy trunk.
pub fn manip_policy_spec() -> ModelSpec {
    ModelSpec::new(vec![MOTION_INPUT], mlp(MOTION_INPUT, 64, MANIP_OUTPUT))
}

/// Selector conv backbone: two stride-1 3x3 convs over the 32x32 patch.
pub fn selector_conv_spec() -> ModelSpec {
    ModelSpec::new(
        vec![1, PATCH_SIDE, PATCH_SIDE],
        vec![
            LayerSpec::Conv3x3 { cin: 1, cout: 8, stride: 1 },
            LayerSpec::ReLU,
            LayerSpec::Conv3x3 { cin: 8, cout: 8, stride: 1 },
            LayerSpec::ReLU,
            LayerSpec::Flatten,
        ],
    )
}

/// Selector dense head over conv features + role one-hot, emitting the
/// 32x32 sigmoid mask flattened to 1024.
pub fn selector_head_spec() -> ModelSpec {
    ModelSpec::new(
        vec![CONV_FEATURES + ROLE_DIM],
        vec![
            LayerSpec::Dense { input: CONV_FEATURES + ROLE_DIM, output: 256 },
            LayerSpec::ReLU,
            LayerSpec::Dense { input: 256, output: PATCH_SIDE * PATCH_SIDE },
            LayerSpec::Sigmoid,
        ],
    )
}

/// Detector: same conv backbone, scalar sigmoid head.
pub fn detector_head_spec() -> ModelSpec {
    ModelSpec::new(
        vec![CONV_FEATURES],
        vec![
            LayerSpec::Dense { input: CONV_FEATURES, output: 64 },
            LayerSpec::ReLU,
            LayerSpec::Dense { input: 64, output: 1 },
            LayerSpec::Sigmoid,
        ],
    )
}

/// Architectures for the finite-difference gradient suite.
///
/// Policy trunks check at full size. The selector/detector stacks carry
/// millions of weights while grad_check costs two forward passes per weight,
/// so they check as reduced clones: identical layer kinds, topology, and
/// conditioning layout, smaller spatial dims.
pub fn gradcheck_architectures() -> Vec<(&'static str, ModelSpec)> {
    let side = 10;
    let feat = 8 * side * side;
    vec![
        ("builder-trunk", builder_policy_spec()),
        ("grasp-trunk", grasp_policy_spec()),
        ("manip-trunk", manip_policy_spec()),
        (
            "selector-conv-reduced",
            ModelSpec::new(
                vec![1, side, side],
                vec![
                    LayerSpec::Conv3x3 { cin: 1, cout: 8, stride: 1 },
                    LayerSpec::ReLU,
                    LayerSpec::Conv3x3 { cin: 8, cout: 8, stride: 1 },
                    LayerSpec::ReLU,
                    LayerSpec::Flatten,
                ],
            ),
        ),
        (
            "selector-head-reduced",
            ModelSpec::new(
                vec![feat + ROLE_DIM],
                vec![
                    LayerSpec::Dense { input: feat + ROLE_DIM, output: 16 },
                    LayerSpec::ReLU,
                    LayerSpec::Dense { input: 16, output: side * side },
                    LayerSpec::Sigmoid,
                ],
            ),
        ),
        (
            "detector-reduced",
            ModelSpec::new(
                vec![feat],
                vec![
                    LayerSpec::Dense { input: feat, output: 16 },
                    LayerSpec::ReLU,
                    LayerSpec::Dense { input: 16, output: 1 },
                    LayerSpec::Sigmoid,
                ],
            ),
        ),
        (
            "conv-stride2-path",
            ModelSpec::new(
                vec![1, 8, 8],
                vec![
                    LayerSpec::Conv3x3 { cin: 1, cout: 4, stride: 2 },
                    LayerSpec::ReLU,
                    LayerSpec::MeanPool2,
                    LayerSpec::Flatten,
                    LayerSpec::Dense { input: 4 * 2 * 2, output: 4 },
                    LayerSpec::Sigmoid,
                ],
            ),
        ),
    ]
}
