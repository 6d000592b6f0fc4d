//! The three task scenes: seeded resets, success predicates, shaping rewards,
//! and scene rendering. Scripted privileged strategies live in [`strategy`].
//!
//! Geometry conventions: top-down tasks put the robot origin at (0,0) with
//! the table extending toward +x. Decanting is a side view (x lateral, y up)
//! with gravity on and a ground slab at y = 0.

pub mod strategy;

use crate::geom::{Aabb, Circle, Obb, Vec2};
use crate::phys::{BodyKind, WorldState};
use crate::raster::{
    render_depth, DepthRaster, RenderShape, Viewport, HEIGHT_CONTAINER, HEIGHT_PARTICLE,
    HEIGHT_TARGET_DISC, HEIGHT_TOOL_BLOCK,
};
use crate::rng::DetRng;
use crate::tool::{ToolAssembly, WristSide};
use crate::Real;
use serde::{Deserialize, Serialize};

pub use strategy::{
    container_hold_pose, decant_carry_pos, decant_catch_pose, functional_pull_test,
    hook_place_pose, scripted_strategy, sweeper_start_pose, AttachedTool, StrategyOutcome,
};

/// Planar reach of the robot (meters).
pub const REACH_RADIUS: f64 = 0.6;
/// Step budget standing in for the wall-clock task timeout.
pub const TIMEOUT_STEPS: usize = 2000;
/// Commanded wrist speed for scripted motion (m/s).
pub const WRIST_SPEED: f64 = 0.1;
/// Trajectory snapshot stride (steps).
pub const SNAPSHOT_EVERY: usize = 10;
/// Distance normalizer for shaping rewards (meters).
pub const SHAPING_D_REF: f64 = 0.5;
/// Target disc radius (m).
pub const TARGET_DISC_RADIUS: f64 = 0.03;
/// Decanting particle radius (m).
pub const PARTICLE_RADIUS: f64 = 0.02;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TaskKind {
    Sweeping,
    HookAndGrasp,
    Decanting,
}

impl TaskKind {
    pub const ALL: [TaskKind; 3] = [TaskKind::Sweeping, TaskKind::HookAndGrasp, TaskKind::Decanting];

    pub fn tag(self) -> u64 {
        match self {
            TaskKind::Sweeping => 1,
            TaskKind::HookAndGrasp => 2,
            TaskKind::Decanting => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            TaskKind::Sweeping => "sweeping",
            TaskKind::HookAndGrasp => "hook",
            TaskKind::Decanting => "decanting",
        }
    }
}

/// Scene-body role, used for render heights and predicate bookkeeping.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BodyRole {
    TargetDisc,
    Particle,
    Container,
    Ground,
    ToolLeft,
    ToolRight,
    Gripper,
    Candidate,
}

impl BodyRole {
    /// Nominal render height; None for roles excluded from rendering.
    pub fn height(self) -> Option<f64> {
        match self {
            BodyRole::TargetDisc => Some(HEIGHT_TARGET_DISC),
            BodyRole::Particle => Some(HEIGHT_PARTICLE),
            BodyRole::Container | BodyRole::Ground => Some(HEIGHT_CONTAINER),
            BodyRole::ToolLeft | BodyRole::ToolRight | BodyRole::Gripper | BodyRole::Candidate => {
                Some(HEIGHT_TOOL_BLOCK)
            }
        }
    }

    /// Task furniture: the bodies a fresh reset owns (no tools, no gripper).
    pub fn is_task_object(self) -> bool {
        matches!(
            self,
            BodyRole::TargetDisc | BodyRole::Particle | BodyRole::Container | BodyRole::Ground
        )
    }
}

/// Task definition: fixed geometry plus the step budget.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TaskSpec {
    pub kind: TaskKind,
    pub bounds: Aabb<Real>,
    pub table: Aabb<Real>,
    pub robot_origin: Vec2<Real>,
    pub reach_radius: Real,
    /// Interior half extents of the decanting target container.
    pub container_half: Vec2<Real>,
    pub timeout_steps: usize,
    /// Multiplier on the scripted placement jitter; robustness evaluations
    /// raise it to rank tools by placement tolerance.
    pub place_jitter_scale: Real,
}

impl TaskSpec {
    pub fn standard(kind: TaskKind) -> Self {
        match kind {
            TaskKind::Sweeping | TaskKind::HookAndGrasp => Self {
                kind,
                bounds: Aabb::new(Vec2::new(-0.25, -0.75), Vec2::new(1.25, 0.75)),
                table: Aabb::new(Vec2::new(0.15, -0.55), Vec2::new(1.2, 0.55)),
                robot_origin: Vec2::new(0.0, 0.0),
                reach_radius: REACH_RADIUS,
                container_half: Vec2::new(0.12, 0.06),
                timeout_steps: TIMEOUT_STEPS,
                place_jitter_scale: 1.0,
            },
            TaskKind::Decanting => Self {
                kind,
                bounds: Aabb::new(Vec2::new(-0.75, -0.02), Vec2::new(0.75, 1.48)),
                table: Aabb::new(Vec2::new(-0.6, 0.0), Vec2::new(0.6, 1.0)),
                robot_origin: Vec2::new(-0.45, 0.5),
                reach_radius: REACH_RADIUS,
                container_half: Vec2::new(0.12, 0.06),
                timeout_steps: TIMEOUT_STEPS,
                place_jitter_scale: 1.0,
            },
        }
    }

    pub fn gravity(&self) -> Vec2<Real> {
        match self.kind {
            TaskKind::Decanting => Vec2::new(0.0, -9.81),
            _ => Vec2::zero(),
        }
    }

    /// Stepping parameters for this task's scenes. Decanting lowers the disc
    /// speed cap to 0.5 m/s: per-step travel must stay below the thinnest
    /// wall half-thickness plus the particle radius (0.03 m) or falling
    /// particles tunnel through container walls.
    pub fn step_config(&self) -> crate::phys::StepConfig<Real> {
        let mut cfg = crate::phys::StepConfig::default();
        if self.kind == TaskKind::Decanting {
            cfg.max_speed = 0.5;
        }
        cfg
    }

    /// Fixed full-scene viewport for 64x64 observation renders.
    pub fn scene_viewport(&self, resolution: usize) -> Viewport<Real> {
        let center = match self.kind {
            TaskKind::Decanting => Vec2::new(0.0, 0.73),
            _ => Vec2::new(0.5, 0.0),
        };
        Viewport::new(center, 1.5, resolution)
    }
}

/// A reset scene: the world plus role bookkeeping and task-specific extras.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SceneState {
    pub world: WorldState<Real>,
    pub roles: Vec<BodyRole>,
    pub target_ids: Vec<usize>,
    pub container_ids: Vec<usize>,
    pub rng_seed: u64,
    /// Target disc position at reset, for displacement-based predicates.
    pub initial_target_position: Option<Vec2<Real>>,
    pub drop_point: Option<Vec2<Real>>,
    pub container_interior: Option<Aabb<Real>>,
    /// Body id of the container-role tool during sweeping runs.
    pub sweep_container_body: Option<usize>,
}

impl SceneState {
    pub fn add_kinematic(
        &mut self,
        shapes: Vec<Obb<Real>>,
        pose: crate::geom::Pose2<Real>,
        role: BodyRole,
    ) -> usize {
        let id = self.world.add_kinematic(shapes, pose);
        self.roles.push(role);
        debug_assert_eq!(self.roles.len(), self.world.bodies.len());
        id
    }

    pub fn add_disc(&mut self, circle: Circle<Real>, dynamic: bool, role: BodyRole) -> usize {
        let id = self.world.add_disc(circle, dynamic);
        self.roles.push(role);
        debug_assert_eq!(self.roles.len(), self.world.bodies.len());
        id
    }

    pub fn target_position(&self) -> Vec2<Real> {
        self.world.disc_position(self.target_ids[0])
    }

    /// World AABB of a kinematic body's shapes.
    pub fn body_aabb(&self, id: usize) -> Option<Aabb<Real>> {
        match &self.world.bodies[id].kind {
            BodyKind::Kinematic { .. } => Aabb::of_obbs(&self.world.shapes_world(id)),
            _ => None,
        }
    }
}

/// Deterministic scene from a seed.
pub fn reset(spec: &TaskSpec, seed: u64) -> SceneState {
    let mut rng = DetRng::keyed(&[0x5EED, spec.kind.tag(), seed]);
    let mut scene = SceneState {
        world: WorldState::new(spec.bounds, spec.gravity()),
        roles: Vec::new(),
        target_ids: Vec::new(),
        container_ids: Vec::new(),
        rng_seed: seed,
        initial_target_position: None,
        drop_point: None,
        container_interior: None,
        sweep_container_body: None,
    };

    match spec.kind {
        TaskKind::Sweeping => {
            let pos = Vec2::new(rng.range(0.35, 0.55), rng.range(-0.20, 0.20));
            let id = scene.add_disc(Circle::new(pos, TARGET_DISC_RADIUS), true, BodyRole::TargetDisc);
            scene.target_ids.push(id);
        }
        TaskKind::HookAndGrasp => {
            let d = rng.range(0.65, 0.85);
            let phi = rng.range(-0.30, 0.30);
            let pos = spec.robot_origin + Vec2::new(d * phi.cos(), d * phi.sin());
            let id = scene.add_disc(Circle::new(pos, TARGET_DISC_RADIUS), true, BodyRole::TargetDisc);
            scene.target_ids.push(id);
        }
        TaskKind::Decanting => {
            // Ground slab, top face at y = 0.
            scene.add_kinematic(
                vec![Obb::new(Vec2::new(0.0, -0.025), Vec2::new(0.74, 0.025), 0.0)],
                crate::geom::Pose2::identity(),
                BodyRole::Ground,
            );
            // Open-top target container standing on the ground.
            let cx = rng.range(0.18, 0.42);
            let hw = spec.container_half.x; // interior half width
            let wall_h = 0.12;
            let t = 0.02; // wall/floor thickness
            let shapes = vec![
                Obb::new(Vec2::new(0.0, t * 0.5), Vec2::new(hw + t, t * 0.5), 0.0),
                Obb::new(Vec2::new(-(hw + t * 0.5), t + wall_h * 0.5), Vec2::new(t * 0.5, wall_h * 0.5), 0.0),
                Obb::new(Vec2::new(hw + t * 0.5, t + wall_h * 0.5), Vec2::new(t * 0.5, wall_h * 0.5), 0.0),
            ];
            let cid = scene.add_kinematic(
                shapes,
                crate::geom::Pose2::new(Vec2::new(cx, 0.0), 0.0),
                BodyRole::Container,
            );
            scene.container_ids.push(cid);
            scene.container_interior = Some(Aabb::new(
                Vec2::new(cx - hw, t),
                Vec2::new(cx + hw, t + wall_h),
            ));

            // Particle held at the drop point until a strategy releases it.
            let drop = Vec2::new(rng.range(-0.35, -0.15), 0.85);
            scene.drop_point = Some(drop);
            let pid = scene.add_disc(Circle::new(drop, PARTICLE_RADIUS), false, BodyRole::Particle);
            scene.target_ids.push(pid);
        }
    }
    scene.initial_target_position = Some(scene.target_position());
    scene
}

/// Ground-truth task success on the current scene. Pure: the sweeping case
/// runs its pull test on a clone.
pub fn success_predicate(spec: &TaskSpec, scene: &SceneState) -> bool {
    match spec.kind {
        TaskKind::Sweeping => match scene.sweep_container_body {
            Some(id) => functional_pull_test(spec, scene, id),
            None => false,
        },
        TaskKind::HookAndGrasp => {
            scene.target_position().dist(spec.robot_origin) <= spec.reach_radius
        }
        TaskKind::Decanting => {
            let interior = match scene.container_interior {
                Some(a) => a,
                None => return false,
            };
            interior.contains(scene.target_position())
        }
    }
}

/// "Achieved right now" check used for success-from-here frame labels.
/// Sweeping uses capture (disc inside the container tool's AABB) as the
/// mid-episode proxy; other tasks reuse their success predicates directly.
pub fn achieved_now(spec: &TaskSpec, scene: &SceneState) -> bool {
    match spec.kind {
        TaskKind::Sweeping => match scene.sweep_container_body {
            Some(id) => match scene.body_aabb(id) {
                Some(aabb) => {
                    // Capture means the disc was actually swept forward into
                    // the container region, not ejected sideways when the
                    // container was placed.
                    let p = scene.target_position();
                    let swept = scene
                        .initial_target_position
                        .map(|p0| {
                            let dir = (p0 - spec.robot_origin).normalized();
                            (p - p0).dot(dir) >= 0.05
                        })
                        .unwrap_or(true);
                    aabb.contains(p) && swept
                }
                None => false,
            },
            None => false,
        },
        _ => success_predicate(spec, scene),
    }
}

/// Per-block shaping reward in [0, 0.1].
///
/// Sweeping/Decanting grow with distance from the build anchor (reach out);
/// HookAndGrasp shrinks with distance from the target (reach toward it).
pub fn shaping_reward(
    spec: &TaskSpec,
    tool: &ToolAssembly<Real>,
    new_block_world: &Obb<Real>,
    scene: &SceneState,
) -> Real {
    let side = tool.blocks().last().map(|b| b.wrist).unwrap_or(WristSide::Right);
    let anchor = tool.anchor_pose(side).position;
    let c = new_block_world.center;
    match spec.kind {
        TaskKind::Sweeping | TaskKind::Decanting => {
            0.1 * (c.dist(anchor) / SHAPING_D_REF).min(1.0)
        }
        TaskKind::HookAndGrasp => {
            let target = scene.target_position();
            0.1 * (1.0 - (c.dist(target) / SHAPING_D_REF).min(1.0))
        }
    }
}

/// Render the scene bodies selected by `filter` into a heightmap.
pub fn render_scene(
    scene: &SceneState,
    vp: &Viewport<Real>,
    filter: impl Fn(BodyRole) -> bool,
) -> DepthRaster {
    render_world(&scene.world, &scene.roles, vp, filter)
}

/// Render an arbitrary world given its role table.
pub fn render_world(
    world: &WorldState<Real>,
    roles: &[BodyRole],
    vp: &Viewport<Real>,
    filter: impl Fn(BodyRole) -> bool,
) -> DepthRaster {
    let mut shapes: Vec<(RenderShape<Real>, Real)> = Vec::new();
    for (body, &role) in world.bodies.iter().zip(roles) {
        if !filter(role) {
            continue;
        }
        let h = match role.height() {
            Some(h) => h,
            None => continue,
        };
        match &body.kind {
            BodyKind::Kinematic { .. } => {
                for s in world.shapes_world(body.id) {
                    shapes.push((RenderShape::Box(s), h));
                }
            }
            BodyKind::Disc { circle, .. } => shapes.push((RenderShape::Disc(*circle), h)),
        }
    }
    render_depth(&shapes, vp)
}
