//! High-level training entry points for the grasp and manipulation policies.

use crate::arch::{grasp_policy_spec, manip_policy_spec};
use crate::envs::{GraspEnv, ManipEnv, ToolDraw};
use crate::policy::{HeadLayout, PolicyNet};
use crate::reinforce::{reinforce_train, ReinforceConfig};
use serde::{Deserialize, Serialize};
use toolforge_core::tasks::TaskSpec;
use toolforge_neuro::NeuroError;

pub fn new_grasp_policy(seed: u64) -> PolicyNet {
    // Grip head starts strongly closed-off so early exploration moves first.
    PolicyNet::new(grasp_policy_spec(), HeadLayout { n_gauss: 3, n_bern: 1 }, seed)
        .with_logit_offsets(vec![-1.0])
}

pub fn new_manip_policy(seed: u64) -> PolicyNet {
    PolicyNet::new(manip_policy_spec(), HeadLayout { n_gauss: 3, n_bern: 0 }, seed)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GraspTrainConfig {
    /// Curriculum phases: (placement angle range as a fraction of pi,
    /// batches at that range).
    pub phases: Vec<(f64, usize)>,
    pub rc: ReinforceConfig,
}

impl Default for GraspTrainConfig {
    fn default() -> Self {
        Self {
            phases: vec![(0.1, 60), (0.4, 80), (1.0, 120)],
            rc: ReinforceConfig { batches: 0, lr: 1e-3, ..Default::default() },
        }
    }
}

/// REINFORCE on the grasp environment with an angle-range curriculum; the
/// returned curve concatenates the phases.
pub fn train_grasp_policy(
    cfg: &GraspTrainConfig,
    seed: u64,
) -> Result<(PolicyNet, Vec<f64>), NeuroError> {
    let mut policy = new_grasp_policy(seed);
    let mut curve = Vec::new();
    for (phase, &(angle_range, batches)) in cfg.phases.iter().enumerate() {
        let env = GraspEnv { angle_range, ..Default::default() };
        let rc = ReinforceConfig { batches, ..cfg.rc };
        let phase_curve =
            reinforce_train(&env, &mut policy, &rc, seed ^ (phase as u64 + 1) * 0x9E37)?;
        curve.extend(phase_curve);
    }
    Ok((policy, curve))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ManipTrainConfig {
    /// Curriculum phases: (difficulty in (0,1], batches, learning rate).
    pub phases: Vec<(f64, usize, f64)>,
    pub rc: ReinforceConfig,
    pub tool_mix: Vec<ToolDraw>,
}

impl Default for ManipTrainConfig {
    fn default() -> Self {
        Self {
            phases: vec![
                (0.15, 80, 2e-3),
                (0.5, 120, 2e-3),
                (1.0, 200, 2e-3),
                (1.0, 150, 1e-3),
            ],
            rc: ReinforceConfig { gamma: 1.0, ..Default::default() },
            tool_mix: ToolDraw::default_mix(),
        }
    }
}

impl ManipTrainConfig {
    /// Task-tuned defaults. Decanting cups do not survive heavy genome
    /// noise (walls collapse), so its mix stays gentle and skips the prior
    /// family; sweeping leans on the prior family (forward blades), since
    /// pushing skill transfers across blade shapes.
    pub fn default_for(kind: toolforge_core::tasks::TaskKind) -> Self {
        let mut cfg = Self::default();
        match kind {
            toolforge_core::tasks::TaskKind::Decanting => {
                cfg.tool_mix =
                    vec![ToolDraw::genome(0.05), ToolDraw::genome(0.2), ToolDraw::genome(0.4)];
            }
            toolforge_core::tasks::TaskKind::Sweeping => {
                cfg.tool_mix = vec![
                    ToolDraw::genome(0.05),
                    ToolDraw::prior_sweeper(0.3),
                    ToolDraw::prior_sweeper(0.5),
                    ToolDraw::prior_sweeper(0.8),
                ];
            }
            _ => {}
        }
        cfg
    }
}

/// REINFORCE on the manipulation environment with a difficulty curriculum;
/// tools come from the builder genome with exploration noise.
pub fn train_manip_policy(
    spec: &TaskSpec,
    tool_genome: &[f64],
    cfg: &ManipTrainConfig,
    seed: u64,
) -> Result<(PolicyNet, Vec<f64>), NeuroError> {
    let mut policy = new_manip_policy(seed);
    let mut curve = Vec::new();
    for (phase, &(difficulty, batches, lr)) in cfg.phases.iter().enumerate() {
        let mut env = ManipEnv::new(spec.clone(), tool_genome.to_vec());
        env.tool_mix = cfg.tool_mix.clone();
        env.curriculum = difficulty;
        let rc = ReinforceConfig { batches, lr, ..cfg.rc };
        let phase_curve = reinforce_train(&env, &mut policy, &rc, seed ^ (phase as u64 + 1) * 0x517)?;
        curve.extend(phase_curve);
    }
    Ok((policy, curve))
}
