//! Scripted privileged manipulation strategies.
//!
//! These are the teacher scripts: they read ground-truth object poses, place
//! wrist bodies, and drive them through fixed motion plans. Their successes
//! and failures are the only reward source for tool building, and their
//! trajectories provide detector training frames.

use crate::geom::{Aabb, Obb, Pose2, Vec2};
use crate::phys::{step, BodyKind, KinematicVelocity, StepConfig, WorldState};
use crate::tasks::{
    achieved_now, success_predicate, BodyRole, SceneState, TaskKind, TaskSpec, SNAPSHOT_EVERY,
    WRIST_SPEED,
};
use crate::tool::{FreeObject, ToolAssembly, WristSide};
use crate::Real;
use serde::{Deserialize, Serialize};

/// Gap between the drop point and the tool's top face at the catch pose (m).
const CATCH_DROP_GAP: f64 = 0.18;
/// Clearance between the rotating tool's sweep circle and the container rim.
const CARRY_CLEARANCE: f64 = 0.03;
/// Lateral offset of the carry pose relative to the container center (m).
const POUR_X_OFFSET: f64 = 0.05;
/// Pour rotation: +120 degrees over 60 steps.
const ROTATE_STEPS: usize = 60;
const ROTATE_TOTAL: f64 = 2.0 * std::f64::consts::PI / 3.0;
/// Container anchor offset past the target along the sweep line (m).
const CONTAINER_BEYOND: f64 = 0.25;
/// Sweeper start offset before the target along the sweep line (m).
const SWEEPER_BEHIND: f64 = 0.30;
/// Hook placement: last block center this far beyond the target center (m).
const HOOK_BEYOND: f64 = 0.05;
/// Pull distances (m).
const HOOK_PULL: f64 = 0.5;
const PULL_TEST_DIST: f64 = 0.10;
const PULL_TEST_STEPS: usize = 20;
/// Co-displacement threshold for the pull test (m).
const PULL_TEST_THRESHOLD: f64 = 0.08;
/// Scripted placements carry seeded execution noise: position (m) and
/// heading (rad) jitter drawn from the scene seed. Tools must tolerate
/// imperfect placement to count as successful.
const PLACE_JITTER_POS: f64 = 0.02;
const PLACE_JITTER_ANGLE: f64 = 0.1;

/// Deterministic placement jitter for a scene: keyed by the scene seed and a
/// per-placement tag, so equal (tools, scene) still give equal outcomes.
pub fn placement_jitter(spec: &TaskSpec, scene: &SceneState, tag: u64) -> Pose2<Real> {
    let s = spec.place_jitter_scale;
    let mut rng = crate::rng::DetRng::keyed(&[scene.rng_seed, 0x9177E5, tag]);
    Pose2::new(
        Vec2::new(
            rng.range(-PLACE_JITTER_POS, PLACE_JITTER_POS) * s,
            rng.range(-PLACE_JITTER_POS, PLACE_JITTER_POS) * s,
        ),
        rng.range(-PLACE_JITTER_ANGLE, PLACE_JITTER_ANGLE) * s,
    )
}

fn jittered(pose: Pose2<Real>, spec: &TaskSpec, scene: &SceneState, tag: u64) -> Pose2<Real> {
    let j = placement_jitter(spec, scene, tag);
    Pose2::new(pose.position + j.position, pose.angle + j.angle)
}

/// A rigid shape set expressed in the frame of the wrist body that carries
/// it, with one shape designated as the business end.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AttachedTool {
    pub shapes: Vec<Obb<Real>>,
    pub tip_index: usize,
}

impl AttachedTool {
    /// One chain of a built assembly; None if that wrist is empty.
    pub fn from_assembly(tool: &ToolAssembly<Real>, side: WristSide) -> Option<Self> {
        let shapes = tool.body_frame_shapes(side);
        if shapes.is_empty() {
            return None;
        }
        let tip_index = shapes.len() - 1;
        Some(Self { shapes, tip_index })
    }

    /// A grasped free object: shapes move into the wrist frame, and the shape
    /// farthest from the wrist becomes the tip.
    pub fn from_free_object(obj: &FreeObject<Real>) -> Self {
        let shapes = obj.shapes_in_wrist_frame();
        let tip_index = shapes
            .iter()
            .enumerate()
            .max_by(|(_, a), (_, b)| {
                a.center.norm().partial_cmp(&b.center.norm()).expect("finite centers")
            })
            .map(|(i, _)| i)
            .unwrap_or(0);
        Self { shapes, tip_index }
    }

    pub fn tip_center(&self) -> Vec2<Real> {
        self.shapes[self.tip_index].center
    }

    pub fn aabb(&self) -> Aabb<Real> {
        Aabb::of_obbs(&self.shapes).expect("attached tools are non-empty")
    }

    /// Radius of the circle the tool sweeps when rotated about the wrist.
    pub fn max_radius(&self) -> Real {
        self.shapes
            .iter()
            .flat_map(|s| s.corners())
            .map(|c| c.norm())
            .fold(0.0, f64::max)
    }
}

/// Full record of one scripted (or scripted-evaluation) run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StrategyOutcome {
    pub success: bool,
    pub steps_used: usize,
    /// Subsampled world snapshots, first one right after tool placement.
    pub trajectory: Vec<WorldState<Real>>,
    /// Success-from-here label per snapshot; monotone within the episode.
    pub frames_labels: Vec<bool>,
    /// Role table for rendering the snapshots.
    pub roles: Vec<BodyRole>,
    /// True when the strategy could not run because a required wrist was empty.
    pub no_tool: bool,
}

/// Shared run shell: owns the scene clone, steps the world, and records
/// snapshots with achieved-now flags every `SNAPSHOT_EVERY` steps.
struct Run<'a> {
    spec: &'a TaskSpec,
    scene: SceneState,
    cfg: StepConfig<Real>,
    steps: usize,
    since_snapshot: usize,
    snapshots: Vec<WorldState<Real>>,
    achieved: Vec<bool>,
}

impl<'a> Run<'a> {
    fn new(spec: &'a TaskSpec, scene: SceneState) -> Self {
        Self {
            spec,
            scene,
            cfg: spec.step_config(),
            steps: 0,
            since_snapshot: 0,
            snapshots: Vec::new(),
            achieved: Vec::new(),
        }
    }

    fn snapshot(&mut self) {
        self.snapshots.push(self.scene.world.clone());
        self.achieved.push(achieved_now(self.spec, &self.scene));
        self.since_snapshot = 0;
    }

    fn tick(&mut self) {
        step(&mut self.scene.world, &self.cfg).expect("scripted velocities are finite");
        self.steps += 1;
        self.since_snapshot += 1;
        if self.since_snapshot >= SNAPSHOT_EVERY {
            self.snapshot();
        }
    }

    /// Drive one body at a velocity for up to `max_steps`, stopping early
    /// when `until` returns true. Other bodies keep their velocities.
    fn drive(
        &mut self,
        body: usize,
        vel: KinematicVelocity<Real>,
        max_steps: usize,
        mut until: impl FnMut(&SceneState) -> bool,
    ) -> usize {
        self.scene.world.set_kinematic_velocity(body, vel);
        let mut taken = 0;
        while taken < max_steps {
            self.tick();
            taken += 1;
            if until(&self.scene) {
                break;
            }
        }
        self.scene.world.set_kinematic_velocity(body, KinematicVelocity::default());
        taken
    }

    /// Move a body's origin to `target` in a straight line at the scripted
    /// wrist speed; arrival is exact because the velocity divides the path.
    fn move_to(&mut self, body: usize, target: Vec2<Real>) {
        let from = self.scene.world.kinematic_pose(body).position;
        let delta = target - from;
        let dist = delta.norm();
        if dist < 1e-12 {
            return;
        }
        let n = (dist / (WRIST_SPEED * self.cfg.dt)).ceil() as usize;
        let vel = delta.scale(1.0 / (n as f64 * self.cfg.dt));
        self.drive(body, KinematicVelocity { linear: vel, angular: 0.0 }, n, |_| false);
    }

    /// Zero kinematic velocities and step until dynamic discs are slow.
    fn settle(&mut self, max_steps: usize, eps: Real) {
        for b in &mut self.scene.world.bodies {
            if let BodyKind::Kinematic { velocity, .. } = &mut b.kind {
                *velocity = KinematicVelocity::default();
            }
        }
        let all_slow = |w: &WorldState<Real>| {
            w.bodies.iter().all(|b| match &b.kind {
                BodyKind::Disc { velocity, dynamic, .. } => !*dynamic || velocity.norm() < eps,
                _ => true,
            })
        };
        let mut taken = 0;
        while taken < max_steps {
            self.tick();
            taken += 1;
            if all_slow(&self.scene.world) {
                break;
            }
        }
    }

    fn finish(mut self, success: bool) -> StrategyOutcome {
        if self.since_snapshot > 0 || self.snapshots.is_empty() {
            self.snapshot();
        }
        let labels = monotone_labels(success, &self.achieved);
        StrategyOutcome {
            success,
            steps_used: self.steps,
            trajectory: self.snapshots,
            frames_labels: labels,
            roles: self.scene.roles.clone(),
            no_tool: false,
        }
    }
}

/// Labels are success AND (snapshot at or after the first achieved index):
/// monotone within the episode by construction.
fn monotone_labels(success: bool, achieved: &[bool]) -> Vec<bool> {
    if !success {
        return vec![false; achieved.len()];
    }
    let first = achieved.iter().position(|&a| a).unwrap_or(achieved.len().saturating_sub(1));
    (0..achieved.len()).map(|i| i >= first).collect()
}

fn no_tool_outcome(scene: &SceneState) -> StrategyOutcome {
    StrategyOutcome {
        success: false,
        steps_used: 0,
        trajectory: vec![scene.world.clone()],
        frames_labels: vec![false],
        roles: scene.roles.clone(),
        no_tool: true,
    }
}

/// Direction of the sweep/hook line: robot origin toward the target.
pub fn approach_dir(spec: &TaskSpec, scene: &SceneState) -> Vec2<Real> {
    (scene.target_position() - spec.robot_origin).normalized()
}

/// Place a wrist so that the attached chain's bounding box is centered on
/// the approach ray with its near edge (toward the robot) at `near_coord`
/// beyond the target. Works for arbitrary chain geometry: the bulk of the
/// tool, not the anchor, is what gets positioned.
fn bulk_centered_pose(
    scene: &SceneState,
    dir: Vec2<Real>,
    tool: &AttachedTool,
    angle: Real,
    near_coord: Real,
) -> Pose2<Real> {
    let ab = tool.aabb();
    let c = ab.center();
    // World extent of the rotated body AABB along the ray.
    let half = Vec2::new(ab.max.x - c.x, ab.max.y - c.y);
    let (s, co) = angle.sin_cos();
    let along = (co * half.x).abs() + (s * half.y).abs();
    let center_world = scene.target_position() + dir.scale(near_coord + along);
    Pose2::new(center_world - c.rotated(angle), angle)
}

/// Scripted container hold pose: the chain's bulk sits centered on the sweep
/// line just beyond the target, x-axis facing back toward the robot so
/// chains built along +x open toward the sweep.
pub fn container_hold_pose(spec: &TaskSpec, scene: &SceneState, tool: &AttachedTool) -> Pose2<Real> {
    let dir = approach_dir(spec, scene);
    let angle = (-dir.y).atan2(-dir.x);
    bulk_centered_pose(scene, dir, tool, angle, CONTAINER_BEYOND - 0.15)
}

/// Scripted sweeper start pose: the blade's bulk sits centered on the sweep
/// line behind the target, x-axis along the sweep, backed off so the chain
/// clears the disc at spawn.
pub fn sweeper_start_pose(spec: &TaskSpec, scene: &SceneState, tool: &AttachedTool) -> Pose2<Real> {
    let dir = approach_dir(spec, scene);
    let angle = dir.y.atan2(dir.x);
    let ab = tool.aabb();
    let span = (ab.max.x - ab.min.x).max(ab.max.y - ab.min.y);
    bulk_centered_pose(scene, dir, tool, angle, -(SWEEPER_BEHIND.max(span + 0.12)))
}

/// Scripted hook placement: wrist positioned so the tool tip lands just past
/// the target on the approach ray, clamped into the reach disc.
pub fn hook_place_pose(spec: &TaskSpec, scene: &SceneState, tool: &AttachedTool) -> Pose2<Real> {
    let dir = approach_dir(spec, scene);
    let alpha = dir.y.atan2(dir.x);
    let q = scene.target_position() + dir.scale(HOOK_BEYOND);
    let mut wrist = q - tool.tip_center().rotated(alpha);
    let from_origin = wrist - spec.robot_origin;
    if from_origin.norm() > spec.reach_radius {
        wrist = spec.robot_origin + from_origin.normalized().scale(spec.reach_radius);
    }
    Pose2::new(wrist, alpha)
}

/// Scripted decanting poses: catch under the drop point, carry above the
/// target container with rotation clearance.
pub fn decant_catch_pose(scene: &SceneState, tool: &AttachedTool) -> Pose2<Real> {
    let drop = scene.drop_point.expect("decanting scene has a drop point");
    let ab = tool.aabb();
    let c = ab.center();
    Pose2::new(Vec2::new(drop.x - c.x, drop.y - CATCH_DROP_GAP - ab.max.y), 0.0)
}

pub fn decant_carry_pos(scene: &SceneState, tool: &AttachedTool) -> Vec2<Real> {
    let interior = scene.container_interior.expect("decanting scene has a container");
    let ab = tool.aabb();
    let wall_top = interior.max.y;
    let y = wall_top + CARRY_CLEARANCE + tool.max_radius();
    Vec2::new(interior.center().x + POUR_X_OFFSET - ab.center().x, y)
}

/// Run the per-task privileged script for a built assembly.
pub fn scripted_strategy(
    spec: &TaskSpec,
    tool: &ToolAssembly<Real>,
    scene: &SceneState,
) -> StrategyOutcome {
    match spec.kind {
        TaskKind::Sweeping => {
            let container = AttachedTool::from_assembly(tool, WristSide::Left);
            let sweeper = AttachedTool::from_assembly(tool, WristSide::Right);
            match (container, sweeper) {
                (Some(c), Some(s)) => sweep_engine(spec, scene.clone(), &c, &s),
                _ => no_tool_outcome(scene),
            }
        }
        TaskKind::HookAndGrasp => match AttachedTool::from_assembly(tool, WristSide::Right) {
            Some(t) => hook_engine(spec, scene.clone(), &t),
            None => no_tool_outcome(scene),
        },
        TaskKind::Decanting => match AttachedTool::from_assembly(tool, WristSide::Right) {
            Some(t) => decant_engine(spec, scene.clone(), &t),
            None => no_tool_outcome(scene),
        },
    }
}

/// Sweep script: hold the container beyond the target, push the target along
/// the approach line into it, retract the sweeper, then run the pull test.
pub fn sweep_engine(
    spec: &TaskSpec,
    mut scene: SceneState,
    container: &AttachedTool,
    sweeper: &AttachedTool,
) -> StrategyOutcome {
    let dir = approach_dir(spec, &scene);
    // The sweeper is attached first so the container holds the higher body
    // id: contact resolution runs in ascending id order and the last
    // projection wins a squeeze, so the container wall (not the advancing
    // blade) must resolve last or the blade crushes the disc through it.
    let sweeper_pose = jittered(sweeper_start_pose(spec, &scene, sweeper), spec, &scene, 1);
    let container_pose = jittered(container_hold_pose(spec, &scene, container), spec, &scene, 2);
    let sid = scene.add_kinematic(sweeper.shapes.clone(), sweeper_pose, BodyRole::ToolRight);
    let cid = scene.add_kinematic(container.shapes.clone(), container_pose, BodyRole::ToolLeft);
    scene.sweep_container_body = Some(cid);

    let mut run = Run::new(spec, scene);
    run.snapshot();

    // Sweep until the disc is seated inside the container region: once its
    // center is in the container's AABB and it advances at less than half the
    // blade speed over an 8-step window, the blade is crushing it against
    // container structure and must stop before projection conflicts squeeze
    // it through a wall. Overshooting the container also ends the sweep.
    let target_id = run.scene.target_ids[0];
    let container_aabb = run.scene.body_aabb(cid).expect("container body has shapes");
    let coord = |s: &SceneState| s.world.disc_position(target_id).dot(dir);
    let aabb_far_coord = {
        // Far corner of the container AABB along the sweep direction.
        let corners = [
            Vec2::new(container_aabb.min.x, container_aabb.min.y),
            Vec2::new(container_aabb.min.x, container_aabb.max.y),
            Vec2::new(container_aabb.max.x, container_aabb.min.y),
            Vec2::new(container_aabb.max.x, container_aabb.max.y),
        ];
        corners.iter().map(|c| c.dot(dir)).fold(f64::NEG_INFINITY, f64::max)
    };
    let mut history: Vec<Real> = vec![coord(&run.scene)];
    let window_travel = 8.0 * WRIST_SPEED * run.cfg.dt; // blade travel over the window
    run.drive(
        sid,
        KinematicVelocity { linear: dir.scale(WRIST_SPEED), angular: 0.0 },
        160,
        |s| {
            let c = coord(s);
            history.push(c);
            let n = history.len();
            let p = s.world.disc_position(target_id);
            if c > aabb_far_coord + 0.05 {
                return true; // blew past the container; hopeless
            }
            if n > 8 && container_aabb.contains(p) {
                let advance_window = history[n - 1] - history[n - 9];
                advance_window < 0.5 * window_travel
            } else {
                false
            }
        },
    );

    // Retract the sweeper so the pull test is unobstructed.
    run.drive(
        sid,
        KinematicVelocity { linear: dir.scale(-WRIST_SPEED), angular: 0.0 },
        50,
        |_| false,
    );

    // Functional pull test, recorded in the trajectory.
    let pull_dir = (spec.robot_origin - run.scene.world.kinematic_pose(cid).position).normalized();
    let before = run.scene.world.disc_position(target_id);
    let speed = PULL_TEST_DIST / (PULL_TEST_STEPS as f64 * run.cfg.dt);
    run.drive(
        cid,
        KinematicVelocity { linear: pull_dir.scale(speed), angular: 0.0 },
        PULL_TEST_STEPS,
        |_| false,
    );
    let moved = (run.scene.world.disc_position(target_id) - before).dot(pull_dir);
    run.finish(moved >= PULL_TEST_THRESHOLD)
}

/// Hook script: place the tool tip just past the target, pull straight back
/// toward the robot, succeed when the target enters the reach disc.
pub fn hook_engine(spec: &TaskSpec, mut scene: SceneState, tool: &AttachedTool) -> StrategyOutcome {
    let pose = jittered(hook_place_pose(spec, &scene, tool), spec, &scene, 3);
    let tid = scene.add_kinematic(tool.shapes.clone(), pose, BodyRole::ToolRight);

    let mut run = Run::new(spec, scene);
    run.snapshot();

    let pull_dir = (spec.robot_origin - pose.position).normalized();
    let steps = (HOOK_PULL / (WRIST_SPEED * run.cfg.dt)).round() as usize;
    let target_id = run.scene.target_ids[0];
    let origin = spec.robot_origin;
    let reach = spec.reach_radius;
    run.drive(
        tid,
        KinematicVelocity { linear: pull_dir.scale(WRIST_SPEED), angular: 0.0 },
        steps,
        |s| s.world.disc_position(target_id).dist(origin) <= reach - 0.02,
    );
    let success = success_predicate(spec, &run.scene);
    run.finish(success)
}

/// Decanting script: catch the dropped particle in the tool, carry it above
/// the container, rotate +120 degrees to pour, and settle.
pub fn decant_engine(spec: &TaskSpec, mut scene: SceneState, tool: &AttachedTool) -> StrategyOutcome {
    let catch = jittered(decant_catch_pose(&scene, tool), spec, &scene, 4);
    let tid = scene.add_kinematic(tool.shapes.clone(), catch, BodyRole::ToolRight);
    let pid = scene.target_ids[0];

    let mut run = Run::new(spec, scene);
    run.snapshot();

    // Release the particle and let it fall into (or past) the tool.
    run.scene.world.set_disc_dynamic(pid, true);
    run.settle(240, 5e-3);

    // Intermediate containment: the particle must ride in the tool, off the
    // ground, before the carry is attempted.
    let caught = match run.scene.body_aabb(tid) {
        Some(aabb) => {
            let p = run.scene.world.disc_position(pid);
            aabb.inflated(0.005).contains(p) && p.y > 0.03
        }
        None => false,
    };
    if !caught {
        return run.finish(false);
    }

    let carry = decant_carry_pos(&run.scene, tool);
    run.move_to(tid, carry);
    run.settle(60, 5e-3);

    let omega = ROTATE_TOTAL / (ROTATE_STEPS as f64 * run.cfg.dt);
    run.drive(
        tid,
        KinematicVelocity { linear: Vec2::zero(), angular: omega },
        ROTATE_STEPS,
        |_| false,
    );
    run.settle(200, 5e-3);

    let success = success_predicate(spec, &run.scene);
    run.finish(success)
}

/// Standalone pull test on a scene clone: translate the container tool
/// 0.10 m toward the robot origin over 20 steps; true iff the target disc
/// co-moves by at least 0.08 m along the pull direction.
pub fn functional_pull_test(spec: &TaskSpec, scene: &SceneState, container_wrist: usize) -> bool {
    let mut world = scene.world.clone();
    for b in &mut world.bodies {
        if let BodyKind::Kinematic { velocity, .. } = &mut b.kind {
            *velocity = KinematicVelocity::default();
        }
    }
    let cfg = spec.step_config();
    let pull_dir = (spec.robot_origin - world.kinematic_pose(container_wrist).position).normalized();
    if pull_dir.norm() == 0.0 {
        return false;
    }
    let speed = PULL_TEST_DIST / (PULL_TEST_STEPS as f64 * cfg.dt);
    world.set_kinematic_velocity(
        container_wrist,
        KinematicVelocity { linear: pull_dir.scale(speed), angular: 0.0 },
    );
    let target_id = scene.target_ids[0];
    let before = world.disc_position(target_id);
    for _ in 0..PULL_TEST_STEPS {
        step(&mut world, &cfg).expect("pull test velocities are finite");
    }
    (world.disc_position(target_id) - before).dot(pull_dir) >= PULL_TEST_THRESHOLD
}
