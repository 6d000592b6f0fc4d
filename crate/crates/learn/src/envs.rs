//! Grasping and tool-manipulation environments.
//!
//! Observations are egocentric: world shapes are re-expressed in the
//! gripper/wrist frame before rendering, so relative pose is directly
//! visible. Actions are raw Gaussian samples squashed into velocity bounds
//! by the environment.

use crate::builder::{prior_genome, tool_from_genome, GENOME_STEP};
use crate::policy::PolicyNet;
use crate::reinforce::{EpisodeTrace, PgEnv, StepTrace};
use toolforge_core::geom::{compose, wrap_angle, Obb, Pose2, Vec2};
use toolforge_core::phys::{step, KinematicVelocity};
use toolforge_core::raster::{
    downsample, render_depth, DepthRaster, RenderShape, Viewport, HEIGHT_TOOL_BLOCK,
};
use toolforge_core::rng::DetRng;
use toolforge_core::tasks::{
    achieved_now, container_hold_pose, reset, success_predicate, BodyRole, SceneState, TaskKind,
    TaskSpec,
};
use toolforge_core::tool::{BlockSpec, FreeObject, ToolAssembly, WristSide};
use toolforge_core::Real;
use toolforge_neuro::Tensor;

/// One entry of the manip-env tool mix: a seeded draw around either the
/// trained genome or the exploration prior.
#[derive(Clone, Copy, Debug, serde::Serialize, serde::Deserialize)]
pub struct ToolDraw {
    pub from_prior: bool,
    pub noise: f64,
    /// Sweeping only: draw the policy-driven sweeper chain from the prior
    /// family while the scripted-held container chain keeps the genome
    /// (prior chains are straight sticks, useless as containers).
    pub prior_sweeper_only: bool,
}

impl ToolDraw {
    pub fn genome(noise: f64) -> Self {
        Self { from_prior: false, noise, prior_sweeper_only: false }
    }
    pub fn prior(noise: f64) -> Self {
        Self { from_prior: true, noise, prior_sweeper_only: false }
    }
    pub fn prior_sweeper(noise: f64) -> Self {
        Self { from_prior: false, noise, prior_sweeper_only: true }
    }
    pub fn default_mix() -> Vec<ToolDraw> {
        vec![Self::genome(0.05), Self::genome(0.3), Self::prior(0.4), Self::prior(0.8)]
    }
}

/// Linear velocity bound (m/s) and angular bound (rad/s) after squashing.
pub const V_BOUND: f64 = 0.2;
pub const W_BOUND: f64 = 1.0;
/// Grasp success thresholds.
pub const GRASP_POS_TOL: f64 = 0.02;
pub const GRASP_ANGLE_TOL: f64 = 0.1;
/// Egocentric viewport extents (m).
pub const GRASP_VIEW: f64 = 0.7;
pub const MANIP_VIEW: f64 = 1.3;

/// Squash raw motion samples into bounded commands.
pub fn squash_motion(raw: &[f64], no_rotation: bool) -> (Vec2<Real>, Real) {
    let v = Vec2::new(V_BOUND * raw[0].tanh(), V_BOUND * raw[1].tanh());
    let w = if no_rotation { 0.0 } else { W_BOUND * raw[2].tanh() };
    (v, w)
}

/// Render shapes re-expressed in an observer frame, pooled to 16x16, with
/// the observer pose appended as proprioception.
pub fn egocentric_input(
    shapes: &[(Obb<Real>, f64)],
    observer: Pose2<Real>,
    view: f64,
) -> Tensor<f32> {
    let inv = observer.inverse();
    let transformed: Vec<(RenderShape<Real>, Real)> = shapes
        .iter()
        .map(|(s, h)| (RenderShape::Box(s.transformed(inv)), *h))
        .collect();
    let vp = Viewport::new(Vec2::zero(), view, 64);
    let raster = render_depth(&transformed, &vp);
    let pooled = downsample(&raster, 4).expect("64 pools to 16");
    let mut data = Vec::with_capacity(pooled.values.len() + 3);
    data.extend_from_slice(&pooled.values);
    data.push(observer.position.x as f32);
    data.push(observer.position.y as f32);
    data.push(observer.angle as f32);
    let n = data.len();
    Tensor::from_vec(&[n], data)
}

fn egocentric_with_discs(
    boxes: &[(Obb<Real>, f64)],
    discs: &[(Vec2<Real>, f64, f64)],
    observer: Pose2<Real>,
    view: f64,
) -> Tensor<f32> {
    let inv = observer.inverse();
    let mut transformed: Vec<(RenderShape<Real>, Real)> = boxes
        .iter()
        .map(|(s, h)| (RenderShape::Box(s.transformed(inv)), *h))
        .collect();
    for &(c, r, h) in discs {
        transformed.push((
            RenderShape::Disc(toolforge_core::Circle::new(inv.transform(c), r)),
            h,
        ));
    }
    let vp = Viewport::new(Vec2::zero(), view, 64);
    let raster = render_depth(&transformed, &vp);
    let pooled = downsample(&raster, 4).expect("64 pools to 16");
    let mut data = Vec::with_capacity(pooled.values.len() + 3);
    data.extend_from_slice(&pooled.values);
    data.push(observer.position.x as f32);
    data.push(observer.position.y as f32);
    data.push(observer.angle as f32);
    let n = data.len();
    Tensor::from_vec(&[n], data)
}

// ------------------------------------------------------------------ grasp --

/// Task-agnostic grasping: a built tool is detached at a random pose and the
/// gripper must reach its grasp pose and close.
pub struct GraspEnv {
    pub horizon: usize,
    /// Placement angle range as a fraction of pi (curriculum knob; 1.0 is
    /// the full distribution).
    pub angle_range: f64,
    /// Placement radius range around the robot origin.
    pub radius: (f64, f64),
}

impl Default for GraspEnv {
    fn default() -> Self {
        Self { horizon: 150, angle_range: 1.0, radius: (0.12, 0.30) }
    }
}

impl GraspEnv {
    /// Random 1-3 block chain with a seeded shape.
    pub fn random_tool(&self, rng: &mut DetRng) -> ToolAssembly<Real> {
        let spec = TaskSpec::standard(TaskKind::HookAndGrasp);
        let mut tool = ToolAssembly::new(Pose2::new(spec.robot_origin, 0.0), spec.bounds);
        for _ in 0..1 + rng.index(3) {
            let _ = tool.append_block(BlockSpec {
                rel_offset: Vec2::new(rng.range(0.02, 0.1), rng.range(-0.05, 0.05)),
                rel_angle: rng.range(-1.0, 1.0),
                size: Vec2::new(rng.range(0.03, 0.1), rng.range(0.03, 0.1)),
                wrist: WristSide::Right,
            });
        }
        tool
    }

    /// Sampled episode setup: (object, world grasp pose).
    pub fn place(&self, rng: &mut DetRng) -> (FreeObject<Real>, Pose2<Real>) {
        let tool = self.random_tool(rng);
        let r = rng.range(self.radius.0, self.radius.1);
        let phi = rng.range(-std::f64::consts::PI, std::f64::consts::PI);
        let theta = rng.range(-self.angle_range, self.angle_range) * std::f64::consts::PI;
        let grasp_world = Pose2::new(Vec2::new(r * phi.cos(), r * phi.sin()), theta);
        let mut obj = tool.detach(WristSide::Right, Pose2::identity()).expect("non-empty");
        obj.pose = compose(grasp_world, obj.grasp_pose.inverse());
        (obj, grasp_world)
    }

    fn observe(&self, obj: &FreeObject<Real>, gripper: Pose2<Real>) -> Tensor<f32> {
        let shapes: Vec<(Obb<Real>, f64)> = obj
            .world_shapes()
            .into_iter()
            .map(|s| (s, HEIGHT_TOOL_BLOCK))
            .collect();
        egocentric_input(&shapes, gripper, GRASP_VIEW)
    }

    fn pose_ok(grasp: Pose2<Real>, gripper: Pose2<Real>) -> bool {
        gripper.position.dist(grasp.position) < GRASP_POS_TOL
            && wrap_angle(gripper.angle - grasp.angle).abs() < GRASP_ANGLE_TOL
    }

    /// Run one episode with a caller-supplied controller; used by both the
    /// policy rollout and the scripted oracle.
    fn episode(
        &self,
        episode_seed: u64,
        mut act: impl FnMut(&Tensor<f32>, &mut DetRng) -> (StepOrScript, Option<StepTrace>),
    ) -> (EpisodeTrace, bool, Vec<(Pose2<Real>, bool)>) {
        let mut rng = DetRng::new(episode_seed);
        let (obj, grasp) = self.place(&mut rng);
        let mut gripper = Pose2::identity();
        let mut trace = EpisodeTrace::default();
        let mut frames = Vec::new();
        let mut success = false;
        let dt = 0.05;
        for _ in 0..self.horizon {
            let input = self.observe(&obj, gripper);
            let (cmd, step_trace) = act(&input, &mut rng);
            if let Some(st) = step_trace {
                trace.steps.push(st);
            }
            let (v, w, grip) = match cmd {
                StepOrScript::Motion { v, w, grip } => (v, w, grip),
                StepOrScript::Scripted => {
                    // Straight-line privileged servo toward the grasp pose.
                    let dp = grasp.position - gripper.position;
                    let v = if dp.norm() > V_BOUND * dt {
                        dp.normalized().scale(V_BOUND)
                    } else {
                        dp.scale(1.0 / dt)
                    };
                    let da = wrap_angle(grasp.angle - gripper.angle);
                    let w = (da / dt).clamp(-W_BOUND, W_BOUND);
                    let close = Self::pose_ok(grasp, gripper);
                    (v, w, close)
                }
            };
            gripper = Pose2::new(gripper.position + v.scale(dt), gripper.angle + w * dt);
            let ok_now = Self::pose_ok(grasp, gripper);
            frames.push((gripper, ok_now));
            if ok_now && grip {
                trace.rewards.push(1.0);
                success = true;
                break;
            }
            trace.rewards.push(-0.01 * gripper.position.dist(grasp.position));
        }
        (trace, success, frames)
    }

    /// Deterministic-policy success rate over held-out placements.
    pub fn eval_success(&self, policy: &PolicyNet, n: usize, seed: u64) -> f64 {
        use rayon::prelude::*;
        let wins: usize = (0..n)
            .into_par_iter()
            .map(|i| {
                let es = DetRng::keyed(&[seed, 0x93A5, i as u64]).next_u64();
                let (_, ok, _) = self.episode(es, |input, _rng| {
                    let out = policy.forward_trunk(input);
                    let mode = policy.mode(&out);
                    let (v, w) = squash_motion(&mode.gauss, false);
                    (StepOrScript::Motion { v, w, grip: mode.bern[0] }, None)
                });
                ok as usize
            })
            .sum();
        wins as f64 / n as f64
    }

    /// Scripted-oracle success rate (upper-bound harness).
    pub fn oracle_success(&self, n: usize, seed: u64) -> f64 {
        let mut wins = 0;
        for i in 0..n {
            let es = DetRng::keyed(&[seed, 0x93A5, i as u64]).next_u64();
            let (_, ok, _) = self.episode(es, |_input, _rng| (StepOrScript::Scripted, None));
            wins += ok as usize;
        }
        wins as f64 / n as f64
    }

    /// Labeled detector frames: egocentric 32x32 renders with monotone
    /// success-from-here labels. Oracle episodes provide positives; random
    /// wander provides negatives.
    pub fn collect_frames(&self, n_episodes: usize, seed: u64) -> Vec<(DepthRaster, bool)> {
        let mut frames = Vec::new();
        for i in 0..n_episodes {
            let scripted = i % 2 == 0;
            let es = DetRng::keyed(&[seed, 0xF4A3, i as u64]).next_u64();
            let mut rng = DetRng::new(es);
            let (obj, grasp) = self.place(&mut rng);
            let mut gripper = Pose2::identity();
            let dt = 0.05;
            let mut ep: Vec<(DepthRaster, bool)> = Vec::new();
            let mut success = false;
            for t in 0..self.horizon {
                let (v, w) = if scripted {
                    let dp = grasp.position - gripper.position;
                    let v = if dp.norm() > V_BOUND * dt {
                        dp.normalized().scale(V_BOUND)
                    } else {
                        dp.scale(1.0 / dt)
                    };
                    let da = wrap_angle(grasp.angle - gripper.angle);
                    (v, (da / dt).clamp(-W_BOUND, W_BOUND))
                } else {
                    (
                        Vec2::new(rng.range(-V_BOUND, V_BOUND), rng.range(-V_BOUND, V_BOUND)),
                        rng.range(-W_BOUND, W_BOUND),
                    )
                };
                gripper = Pose2::new(gripper.position + v.scale(dt), gripper.angle + w * dt);
                if t % 5 == 0 {
                    let shapes: Vec<(Obb<Real>, f64)> = obj
                        .world_shapes()
                        .into_iter()
                        .map(|s| (s, HEIGHT_TOOL_BLOCK))
                        .collect();
                    let inv = gripper.inverse();
                    let transformed: Vec<(RenderShape<Real>, Real)> = shapes
                        .iter()
                        .map(|(s, h)| (RenderShape::Box(s.transformed(inv)), *h))
                        .collect();
                    let vp = Viewport::new(Vec2::zero(), GRASP_VIEW, 32);
                    ep.push((render_depth(&transformed, &vp), Self::pose_ok(grasp, gripper)));
                }
                if Self::pose_ok(grasp, gripper) && scripted {
                    success = true;
                    break;
                }
            }
            // Monotone success-from-here labels.
            let first = ep.iter().position(|(_, ok)| *ok).unwrap_or(ep.len());
            for (j, (raster, _)) in ep.into_iter().enumerate() {
                frames.push((raster, success && j >= first));
            }
        }
        frames
    }
}

pub enum StepOrScript {
    Motion { v: Vec2<Real>, w: Real, grip: bool },
    Scripted,
}

impl PgEnv for GraspEnv {
    fn rollout(&self, policy: &PolicyNet, episode_seed: u64) -> EpisodeTrace {
        let (trace, _, _) = self.episode(episode_seed, |input, rng| {
            let out = policy.forward_trunk(input);
            let sample = policy.sample(&out, rng);
            let (v, w) = squash_motion(&sample.gauss, false);
            let grip = sample.bern[0];
            let st = StepTrace { input: input.clone(), sample };
            (StepOrScript::Motion { v, w, grip }, Some(st))
        });
        trace
    }
}

// ------------------------------------------------------------------ manip --

/// Tool-manipulation environment: a built (or grasped) tool rides the wrist
/// and the policy drives wrist velocities to finish the task.
pub struct ManipEnv {
    pub spec: TaskSpec,
    /// Genome of the tool-building sequence used to create tools.
    pub tool_genome: Vec<f64>,
    /// Per-episode tool draws cycle through this mix, so training sees the
    /// builder's whole quality range, from its best tool to exploratory
    /// chains (the same diversity the selector trains on).
    pub tool_mix: Vec<ToolDraw>,
    /// Horizon in simulation ticks.
    pub horizon: usize,
    pub no_rotation: bool,
    /// Policies decide every this many ticks (the 3 Hz decision rate);
    /// commands persist between decisions so exploration moves in bursts.
    pub decision_every: usize,
    /// Difficulty in (0, 1]: scales the task's travel distances during
    /// curriculum training. Evaluation always runs at 1.0.
    pub curriculum: f64,
    /// Randomize the wrist start pose (training robustness; the pipeline
    /// enters this environment from wherever grasping finished).
    pub start_jitter: bool,
    /// Start the wrist facing the task line (the robot orients toward the
    /// target before engaging). The no-rotation ablation locks the wrist to
    /// the canonical world orientation instead.
    pub face_task: bool,
}

impl ManipEnv {
    pub fn new(spec: TaskSpec, tool_genome: Vec<f64>) -> Self {
        let horizon = match spec.kind {
            TaskKind::Decanting => 700,
            _ => 560,
        };
        Self {
            spec,
            tool_genome,
            tool_mix: ToolDraw::default_mix(),
            horizon,
            no_rotation: false,
            decision_every: 7,
            curriculum: 1.0,
            start_jitter: true,
            face_task: true,
        }
    }

    /// Engage pose at episode start: the base repositions onto the approach
    /// line facing the task (the stage-entry script the pipeline also runs),
    /// with seeded slack for robustness. The rotation-locked ablation keeps
    /// the canonical world orientation instead of facing the task.
    /// `blade_reach` is the attached tool's forward extent, so sweeping
    /// starts clear of the disc.
    pub fn engage_pose(&self, scene: &SceneState, rng: &mut DetRng, blade_reach: f64) -> Pose2<Real> {
        let dir = (scene.target_position() - self.spec.robot_origin).normalized();
        let angle = if self.face_task && !self.no_rotation && self.spec.kind != TaskKind::Decanting
        {
            dir.y.atan2(dir.x)
        } else {
            0.0
        };
        let jit = |rng: &mut DetRng, lo: f64, hi: f64| {
            if self.start_jitter {
                rng.range(lo, hi)
            } else {
                0.5 * (lo + hi)
            }
        };
        match self.spec.kind {
            TaskKind::Decanting => {
                let drop = scene.drop_point.expect("decanting scene");
                let x = drop.x + jit(rng, -0.12, 0.12);
                Pose2::new(Vec2::new(x, jit(rng, 0.38, 0.5)), angle)
            }
            TaskKind::HookAndGrasp => {
                let along = jit(rng, 0.08, 0.35);
                let lateral = jit(rng, -0.03, 0.03);
                Pose2::new(
                    self.spec.robot_origin + dir.scale(along) + dir.perp().scale(lateral),
                    angle,
                )
            }
            TaskKind::Sweeping => {
                let behind = blade_reach + 0.08 + jit(rng, 0.0, 0.15);
                let lateral = jit(rng, -0.05, 0.05);
                Pose2::new(
                    scene.target_position() - dir.scale(behind) + dir.perp().scale(lateral),
                    angle,
                )
            }
        }
    }

    /// Curriculum transform of a fresh scene: shrink travel distances toward
    /// easy configurations as `curriculum` approaches 0.
    fn apply_curriculum(&self, scene: &mut SceneState) {
        let c = self.curriculum.clamp(0.05, 1.0);
        if c >= 1.0 {
            return;
        }
        match self.spec.kind {
            TaskKind::HookAndGrasp => {
                // Pull the target toward the reach boundary.
                let origin = self.spec.robot_origin;
                let p = scene.target_position();
                let d = p.dist(origin);
                let easy = self.spec.reach_radius + 0.05;
                let scaled = easy + (d - easy) * c;
                let dir = (p - origin).normalized();
                scene.world.set_disc_position(scene.target_ids[0], origin + dir.scale(scaled));
            }
            TaskKind::Sweeping => {} // handled by start jitter proximity below
            TaskKind::Decanting => {
                // Move the container toward the drop point.
                if let (Some(drop), Some(interior)) = (scene.drop_point, scene.container_interior)
                {
                    let cid = scene.container_ids[0];
                    let pose = scene.world.kinematic_pose(cid);
                    let easy_x = drop.x + 0.3;
                    let new_x = easy_x + (pose.position.x - easy_x) * c;
                    let shift = new_x - pose.position.x;
                    scene.world.set_kinematic_pose(
                        cid,
                        Pose2::new(Vec2::new(new_x, pose.position.y), pose.angle),
                    );
                    scene.container_interior = Some(toolforge_core::Aabb::new(
                        Vec2::new(interior.min.x + shift, interior.min.y),
                        Vec2::new(interior.max.x + shift, interior.max.y),
                    ));
                }
            }
        }
    }

    /// Run one episode driven by `act`. Returns (trace, success).
    pub fn episode(
        &self,
        episode_seed: u64,
        mut act: impl FnMut(&Tensor<f32>, &mut DetRng) -> ((Vec2<Real>, Real), Option<StepTrace>),
    ) -> (EpisodeTrace, bool) {
        let mut rng = DetRng::new(episode_seed);
        let mut scene = reset(&self.spec, episode_seed);
        self.apply_curriculum(&mut scene);
        // Tool variety: genome draws perturb the trained builder's output,
        // prior draws sample its exploration family.
        let draw = if self.tool_mix.is_empty() {
            ToolDraw::genome(0.0)
        } else {
            self.tool_mix[(episode_seed % self.tool_mix.len() as u64) as usize]
        };
        let blocks = (self.tool_genome.len() / GENOME_STEP).max(1);
        let tool = if draw.prior_sweeper_only {
            // Genome container on the left wrist, prior blade on the right.
            let container = tool_from_genome(
                &self.spec,
                &self.tool_genome,
                Some((&mut rng, draw.noise.min(0.2))),
            );
            let blade = tool_from_genome(&self.spec, &prior_genome(blocks), Some((&mut rng, draw.noise)));
            merge_chains(&self.spec, &container, &blade)
        } else if draw.from_prior {
            tool_from_genome(&self.spec, &prior_genome(blocks), Some((&mut rng, draw.noise)))
        } else if draw.noise > 0.0 {
            tool_from_genome(&self.spec, &self.tool_genome, Some((&mut rng, draw.noise)))
        } else {
            tool_from_genome(&self.spec, &self.tool_genome, None)
        };

        // Attach tools. Sweeping: scripted container on the left wrist,
        // policy drives the sweeper. Others: single right-wrist tool.
        let (wrist_id, tool_shapes) = match self.spec.kind {
            TaskKind::Sweeping => {
                let container = tool.body_frame_shapes(WristSide::Left);
                let sweeper = tool.body_frame_shapes(WristSide::Right);
                if container.is_empty() || sweeper.is_empty() {
                    return (EpisodeTrace::default(), false);
                }
                let holder_blade = toolforge_core::tasks::AttachedTool {
                    shapes: sweeper.clone(),
                    tip_index: sweeper.len() - 1,
                };
                let mut start =
                    toolforge_core::tasks::sweeper_start_pose(&self.spec, &scene, &holder_blade);
                if self.no_rotation || !self.face_task {
                    start.angle = 0.0;
                }
                if self.start_jitter {
                    start.position.x += rng.range(-0.04, 0.04);
                    start.position.y += rng.range(-0.04, 0.04);
                }
                let sid = scene.add_kinematic(sweeper.clone(), start, BodyRole::ToolRight);
                let holder = toolforge_core::tasks::AttachedTool {
                    shapes: container.clone(),
                    tip_index: container.len() - 1,
                };
                let cid = scene.add_kinematic(
                    container,
                    container_hold_pose(&self.spec, &scene, &holder),
                    BodyRole::ToolLeft,
                );
                scene.sweep_container_body = Some(cid);
                (sid, sweeper)
            }
            _ => {
                let shapes = tool.body_frame_shapes(WristSide::Right);
                if shapes.is_empty() {
                    return (EpisodeTrace::default(), false);
                }
                let reach = toolforge_core::Aabb::of_obbs(&shapes)
                    .map(|a| a.max.x.max(0.0))
                    .unwrap_or(0.25);
                let start = self.engage_pose(&scene, &mut rng, reach);
                let tid = scene.add_kinematic(shapes.clone(), start, BodyRole::ToolRight);
                (tid, shapes)
            }
        };

        let shape_centers: Vec<Vec2<Real>> = tool_shapes.iter().map(|s| s.center).collect();

        let cfg = self.spec.step_config();
        let mut trace = EpisodeTrace::default();
        let mut released = self.spec.kind != TaskKind::Decanting;
        let mut success = false;

        let mut tick = 0;
        'episode: while tick < self.horizon {
            let input = self.observe(&scene, wrist_id);
            let ((v, w), st) = act(&input, &mut rng);
            if let Some(s) = st {
                trace.steps.push(s);
            }
            scene
                .world
                .set_kinematic_velocity(wrist_id, KinematicVelocity { linear: v, angular: w });

            // The command persists for a decision window of ticks.
            let mut decision_reward = 0.0;
            for _ in 0..self.decision_every {
                if tick >= self.horizon {
                    break;
                }
                step(&mut scene.world, &cfg).expect("policy commands squashed finite");
                tick += 1;

                // Decanting: the particle releases once the tool is under
                // the drop point (the env-side analog of the scripted spawn).
                if !released {
                    if let (Some(drop), Some(aabb)) = (scene.drop_point, scene.body_aabb(wrist_id))
                    {
                        let cx = aabb.center().x;
                        if (cx - drop.x).abs() < 0.05 && aabb.max.y < drop.y - 0.03 {
                            scene.world.set_disc_dynamic(scene.target_ids[0], true);
                            released = true;
                        }
                    }
                }

                    let achieved = achieved_now(&self.spec, &scene);
                if achieved && self.spec.kind != TaskKind::Sweeping {
                    trace.rewards.push(decision_reward + 1.0);
                    success = true;
                    break 'episode;
                }
                if achieved && self.spec.kind == TaskKind::Sweeping {
                    // Epilogue: retract the sweeper, then the pull test.
                    scene.world.set_kinematic_velocity(
                        wrist_id,
                        KinematicVelocity {
                            linear: crate::envs::retract_dir(&self.spec, &scene).scale(0.1),
                            angular: 0.0,
                        },
                    );
                    for _ in 0..50 {
                        step(&mut scene.world, &cfg).expect("finite");
                    }
                    scene
                        .world
                        .set_kinematic_velocity(wrist_id, KinematicVelocity::default());
                    success = success_predicate(&self.spec, &scene);
                    trace.rewards.push(decision_reward + if success { 1.0 } else { 0.0 });
                    break 'episode;
                }

                decision_reward += self.dense_reward(&scene, wrist_id, &shape_centers);
            }
            trace.rewards.push(decision_reward);
        }
        (trace, success)
    }

    /// Dense shaping: tool toward the moved object, moved object toward the
    /// task goal, both at -0.01 per meter. The tool distance uses the
    /// nearest attached shape: contact is what matters, not a nominal tip.
    fn dense_reward(&self, scene: &SceneState, wrist_id: usize, shape_centers: &[Vec2<Real>]) -> f64 {
        let pose = scene.world.kinematic_pose(wrist_id);
        let obj = scene.target_position();
        let tip = shape_centers
            .iter()
            .map(|&c| pose.transform(c))
            .min_by(|a, b| a.dist(obj).partial_cmp(&b.dist(obj)).unwrap())
            .unwrap_or(pose.position);
        let goal = match self.spec.kind {
            TaskKind::HookAndGrasp => self.spec.robot_origin,
            TaskKind::Sweeping => match scene.sweep_container_body {
                Some(id) => scene.world.kinematic_pose(id).position,
                None => self.spec.robot_origin,
            },
            TaskKind::Decanting => scene
                .container_interior
                .map(|a| a.center())
                .unwrap_or(self.spec.robot_origin),
        };
        -0.01 * (tip.dist(obj) + obj.dist(goal))
    }

    /// Egocentric view of everything except the wrist's own attached tool:
    /// the held geometry is constant in the wrist frame (no information) and
    /// its render height would occlude the target disc in exactly the
    /// contact states that matter.
    pub fn observe(&self, scene: &SceneState, wrist_id: usize) -> Tensor<f32> {
        let observer = scene.world.kinematic_pose(wrist_id);
        let mut boxes: Vec<(Obb<Real>, f64)> = Vec::new();
        let mut discs: Vec<(Vec2<Real>, f64, f64)> = Vec::new();
        for (body, &role) in scene.world.bodies.iter().zip(&scene.roles) {
            if body.id == wrist_id {
                continue;
            }
            let Some(h) = role.height() else { continue };
            match &body.kind {
                toolforge_core::phys::BodyKind::Kinematic { .. } => {
                    for s in scene.world.shapes_world(body.id) {
                        boxes.push((s, h));
                    }
                }
                toolforge_core::phys::BodyKind::Disc { circle, .. } => {
                    discs.push((circle.center, circle.radius, h));
                }
            }
        }
        egocentric_with_discs(&boxes, &discs, observer, MANIP_VIEW)
    }
}

/// Compose a two-chain assembly: the left chain of `left_source` plus the
/// right chain of `right_source`.
pub fn merge_chains(
    spec: &TaskSpec,
    left_source: &ToolAssembly<Real>,
    right_source: &ToolAssembly<Real>,
) -> ToolAssembly<Real> {
    let mut merged = ToolAssembly::new(left_source.wrist_pose, spec.bounds);
    for b in left_source.blocks().iter().filter(|b| b.wrist == WristSide::Left) {
        let _ = merged.append_block(*b);
    }
    for b in right_source.blocks().iter().filter(|b| b.wrist == WristSide::Right) {
        let _ = merged.append_block(*b);
    }
    merged
}

/// Direction the sweeper retracts along before the pull test: back toward
/// the robot origin.
pub fn retract_dir(spec: &TaskSpec, scene: &SceneState) -> Vec2<Real> {
    (spec.robot_origin - scene.target_position()).normalized()
}

impl PgEnv for ManipEnv {
    fn rollout(&self, policy: &PolicyNet, episode_seed: u64) -> EpisodeTrace {
        let (trace, _) = self.episode(episode_seed, |input, rng| {
            let out = policy.forward_trunk(input);
            let sample = policy.sample(&out, rng);
            let (v, w) = squash_motion(&sample.gauss, self.no_rotation);
            let st = StepTrace { input: input.clone(), sample };
            ((v, w), Some(st))
        });
        trace
    }
}

impl ManipEnv {
    /// Deterministic-policy success rate over fresh scenes.
    pub fn eval_success(&self, policy: &PolicyNet, n: usize, seed: u64) -> f64 {
        use rayon::prelude::*;
        let wins: usize = (0..n)
            .into_par_iter()
            .map(|i| {
                let es = DetRng::keyed(&[seed, 0x3A21, i as u64]).next_u64();
                let (_, ok) = self.episode(es, |input, _rng| {
                    let out = policy.forward_trunk(input);
                    let mode = policy.mode(&out);
                    let (v, w) = squash_motion(&mode.gauss, self.no_rotation);
                    ((v, w), None)
                });
                ok as usize
            })
            .sum();
        wins as f64 / n as f64
    }

    /// Zero-velocity policy success rate (the null baseline).
    pub fn zero_policy_success(&self, n: usize, seed: u64) -> f64 {
        let mut wins = 0;
        for i in 0..n {
            let es = DetRng::keyed(&[seed, 0x3A21, i as u64]).next_u64();
            let (_, ok) = self.episode(es, |_input, _rng| ((Vec2::zero(), 0.0), None));
            wins += ok as usize;
        }
        wins as f64 / n as f64
    }
}
