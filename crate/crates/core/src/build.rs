//! The tool-building MDP: two-raster observations, block-append actions with
//! an explicit stop head, and terminal evaluation by the task's scripted
//! strategy.

use crate::geom::{Pose2, Vec2};
use crate::raster::{
    render_depth, render_mask, DepthRaster, MaskRaster, RenderShape, Viewport,
    HEIGHT_TOOL_BLOCK, PATCH_EXTENT, PATCH_RESOLUTION, SCENE_RESOLUTION,
};
use crate::rng::DetRng;
use crate::tasks::{
    reset, scripted_strategy, shaping_reward, BodyRole, SceneState, StrategyOutcome, TaskKind,
    TaskSpec,
};
use crate::tool::{BlockSpec, ToolAssembly, WristSide, BUILD_CAP};
use crate::Real;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Wrist-raster window side length (meters).
pub const WRIST_VIEW_EXTENT: f64 = 0.8;
/// RNG stream tag for build rollouts.
pub const RNG_TAG_ROLLOUT: u64 = 0xB11D;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BuildError {
    #[error("episode already terminated")]
    SteppedAfterDone,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct MdpConfig {
    pub gamma: Real,
    pub horizon: usize,
    pub seed_base: u64,
}

impl Default for MdpConfig {
    fn default() -> Self {
        Self { gamma: 0.99, horizon: BUILD_CAP, seed_base: 0 }
    }
}

/// One tool-building action: relative placement, block size, wrist choice
/// (sweeping only) and the stop flag.
#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
pub struct BuildAction {
    pub wrist_logit: Real,
    pub dx: Real,
    pub dy: Real,
    pub dtheta: Real,
    pub w: Real,
    pub h: Real,
    pub stop: bool,
}

impl BuildAction {
    /// Flattened width used by open-loop sequence optimizers: the stop flag
    /// is a real thresholded at zero.
    pub const FLAT_DIM: usize = 7;

    pub fn from_flat(v: &[Real]) -> Self {
        debug_assert_eq!(v.len(), Self::FLAT_DIM);
        Self {
            wrist_logit: v[0],
            dx: v[1],
            dy: v[2],
            dtheta: v[3],
            w: v[4],
            h: v[5],
            stop: v[6] > 0.0,
        }
    }

    pub fn to_flat(&self) -> [Real; Self::FLAT_DIM] {
        [
            self.wrist_logit,
            self.dx,
            self.dy,
            self.dtheta,
            self.w,
            self.h,
            if self.stop { 1.0 } else { -1.0 },
        ]
    }
}

/// The two-raster observation: task objects in a fixed scene window, and the
/// under-construction tool in a wrist-centered window.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ObservationPair {
    pub scene_raster: DepthRaster,
    pub wrist_raster: DepthRaster,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EpisodeStep {
    pub action: BuildAction,
    pub reward: Real,
}

/// Full episode log. Observations are not stored per step (they re-render
/// deterministically); the final patch raster and label mask are.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub seed: u64,
    pub steps: Vec<EpisodeStep>,
    pub final_tool: ToolAssembly<Real>,
    pub final_tool_raster: DepthRaster,
    pub handle_mask: MaskRaster,
    pub success: bool,
    pub return_: Real,
    /// Strategy trajectory, kept for detector frames and rendering.
    pub outcome: Option<StrategyOutcome>,
}

/// Live building episode.
pub struct BuildEnv {
    pub spec: TaskSpec,
    pub cfg: MdpConfig,
    pub scene: SceneState,
    pub tool: ToolAssembly<Real>,
    pub done: bool,
    pub outcome: Option<StrategyOutcome>,
}

impl BuildEnv {
    pub fn new(spec: &TaskSpec, cfg: MdpConfig, seed: u64) -> Self {
        debug_assert!(cfg.horizon <= BUILD_CAP && cfg.gamma >= 0.0 && cfg.gamma < 1.0);
        let scene = reset(spec, seed);
        let tool = ToolAssembly::new(Pose2::new(spec.robot_origin, 0.0), spec.bounds);
        Self { spec: spec.clone(), cfg, scene, tool, done: false, outcome: None }
    }

    /// Render both observation rasters. Deterministic for a given state.
    pub fn observe(&self) -> ObservationPair {
        let scene_vp = self.spec.scene_viewport(SCENE_RESOLUTION);
        let scene_raster =
            crate::tasks::render_scene(&self.scene, &scene_vp, BodyRole::is_task_object);
        let wrist_vp = Viewport::new(self.tool.wrist_pose.position, WRIST_VIEW_EXTENT, SCENE_RESOLUTION);
        let shapes: Vec<(RenderShape<Real>, Real)> = self
            .tool
            .all_world_shapes()
            .into_iter()
            .map(|s| (RenderShape::Box(s), HEIGHT_TOOL_BLOCK))
            .collect();
        let wrist_raster = render_depth(&shapes, &wrist_vp);
        ObservationPair { scene_raster, wrist_raster }
    }

    /// Apply one action. Terminal (stop or capacity) runs the scripted
    /// strategy and pays its binary success; otherwise the clamped block is
    /// appended and the shaping reward paid.
    pub fn step_build(&mut self, a: &BuildAction) -> Result<(Real, bool), BuildError> {
        if self.done {
            return Err(BuildError::SteppedAfterDone);
        }
        let terminal = a.stop || self.tool.len() >= self.cfg.horizon;
        if terminal {
            let outcome = scripted_strategy(&self.spec, &self.tool, &self.scene);
            let reward = if outcome.success { 1.0 } else { 0.0 };
            self.outcome = Some(outcome);
            self.done = true;
            return Ok((reward, true));
        }
        let wrist = match self.spec.kind {
            TaskKind::Sweeping => {
                if a.wrist_logit >= 0.0 {
                    WristSide::Right
                } else {
                    WristSide::Left
                }
            }
            _ => WristSide::Right,
        };
        let spec_block = BlockSpec {
            rel_offset: Vec2::new(a.dx, a.dy),
            rel_angle: a.dtheta,
            size: Vec2::new(a.w, a.h),
            wrist,
        };
        self.tool.append_block(spec_block).expect("capacity checked above");
        let new_world = *self
            .tool
            .world_shapes(wrist)
            .last()
            .expect("just appended");
        let reward = shaping_reward(&self.spec, &self.tool, &new_world, &self.scene);
        Ok((reward, false))
    }

    /// Patch viewport centered on the built tool (or the wrist if empty).
    pub fn patch_viewport(&self) -> Viewport<Real> {
        let center = crate::geom::Aabb::of_obbs(&self.tool.all_world_shapes())
            .map(|a| a.center())
            .unwrap_or(self.tool.wrist_pose.position);
        Viewport::new(center, PATCH_EXTENT, PATCH_RESOLUTION)
    }

    /// Final 32x32 tool patch and the label mask: handle blocks for a
    /// successful episode, all zeros for a failed one.
    pub fn finalize(&self) -> (DepthRaster, MaskRaster) {
        let vp = self.patch_viewport();
        let shapes: Vec<(RenderShape<Real>, Real)> = self
            .tool
            .all_world_shapes()
            .into_iter()
            .map(|s| (RenderShape::Box(s), HEIGHT_TOOL_BLOCK))
            .collect();
        let raster = render_depth(&shapes, &vp);
        let success = self.outcome.as_ref().map(|o| o.success).unwrap_or(false);
        let mask = if success {
            render_mask(&self.tool.handle_region().expect("successful tools are non-empty"), &vp)
        } else {
            MaskRaster::zeros(vp.resolution, vp.resolution)
        };
        (raster, mask)
    }
}

/// Render one chain of a tool into a 32x32 patch with its handle mask
/// (label rule applied by the caller). Used per-role for sweeping tools.
pub fn side_patch(tool: &ToolAssembly<Real>, side: WristSide) -> (DepthRaster, MaskRaster) {
    let shapes = tool.world_shapes(side);
    let center = crate::geom::Aabb::of_obbs(&shapes)
        .map(|a| a.center())
        .unwrap_or(tool.anchor_pose(side).position);
    let vp = Viewport::new(center, PATCH_EXTENT, PATCH_RESOLUTION);
    let render: Vec<(RenderShape<Real>, Real)> =
        shapes.iter().map(|s| (RenderShape::Box(*s), HEIGHT_TOOL_BLOCK)).collect();
    let raster = render_depth(&render, &vp);
    let mask = render_mask(&tool.handle_region_side(side), &vp);
    (raster, mask)
}

/// Run one full episode under a sampling policy. Deterministic given the
/// policy behavior and the seed: the action RNG is keyed by
/// (cfg.seed_base, rollout tag, seed).
pub fn rollout(
    spec: &TaskSpec,
    cfg: MdpConfig,
    seed: u64,
    mut policy: impl FnMut(&ObservationPair, &mut DetRng) -> BuildAction,
) -> EpisodeRecord {
    let mut env = BuildEnv::new(spec, cfg, seed);
    let mut rng = DetRng::keyed(&[cfg.seed_base, RNG_TAG_ROLLOUT, seed]);
    let mut steps = Vec::new();
    let mut return_ = 0.0;
    let mut discount = 1.0;
    loop {
        let obs = env.observe();
        let action = policy(&obs, &mut rng);
        let (reward, done) = env.step_build(&action).expect("loop stops at done");
        steps.push(EpisodeStep { action, reward });
        return_ += discount * reward;
        discount *= cfg.gamma;
        if done {
            break;
        }
    }
    let (final_tool_raster, handle_mask) = env.finalize();
    let success = env.outcome.as_ref().map(|o| o.success).unwrap_or(false);
    EpisodeRecord {
        seed,
        steps,
        final_tool: env.tool,
        final_tool_raster,
        handle_mask,
        success,
        return_,
        outcome: env.outcome,
    }
}

/// Execute a fixed flattened action sequence open-loop (the CEM genome).
/// The sequence provides up to `horizon` actions; the episode ends at the
/// first stop flag or at capacity.
pub fn run_sequence(spec: &TaskSpec, cfg: MdpConfig, seed: u64, flat: &[Real]) -> EpisodeRecord {
    let mut idx = 0;
    rollout(spec, cfg, seed, move |_obs, _rng| {
        let start = idx * BuildAction::FLAT_DIM;
        idx += 1;
        if start + BuildAction::FLAT_DIM <= flat.len() {
            BuildAction::from_flat(&flat[start..start + BuildAction::FLAT_DIM])
        } else {
            BuildAction { stop: true, ..Default::default() }
        }
    })
}
