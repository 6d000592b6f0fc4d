//! Deterministic quasi-static 2D physics.
//!
//! Kinematic bodies (tools, grippers, containers, walls) follow commanded
//! velocities exactly. Dynamic discs are pushed out of penetration by
//! positional projection, plus a normal-velocity transfer from the pushing
//! surface so resting and carried contacts settle instead of accumulating
//! gravity. No impulses, no restitution, no tangential friction.
//!
//! Determinism: all contact iteration is in ascending (kinematic id, disc id,
//! shape index) order, disc-disc pairs in ascending (i, j) order, so a step is
//! a pure function of the world and config.

use crate::geom::{circle_obb_contact, wrap_angle, Aabb, Circle, Obb, Pose2, Vec2};
use crate::scalar::Scalar;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PhysicsError {
    #[error("non-finite velocity on body {0} (corrupted controller output)")]
    NonFiniteVelocity(usize),
}

/// Angular + linear velocity of a kinematic body.
#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
pub struct KinematicVelocity<R> {
    pub linear: Vec2<R>,
    pub angular: R,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum BodyKind<R> {
    Kinematic {
        /// Shapes in the body frame; non-empty.
        shapes: Vec<Obb<R>>,
        pose: Pose2<R>,
        velocity: KinematicVelocity<R>,
    },
    Disc {
        /// Circle center is the world position.
        circle: Circle<R>,
        velocity: Vec2<R>,
        /// Static discs never move; dynamic ones are simulated.
        dynamic: bool,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Body<R> {
    pub id: usize,
    pub kind: BodyKind<R>,
}

/// Full simulator state. Dynamic discs stay inside `bounds`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WorldState<R> {
    pub bodies: Vec<Body<R>>,
    pub gravity: Vec2<R>,
    pub time: R,
    pub bounds: Aabb<R>,
}

/// Stepping parameters. Restitution is fixed at zero by the contact model;
/// the field records the contract.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct StepConfig<R> {
    pub dt: R,
    pub resolution_passes: usize,
    pub restitution: R,
    pub max_speed: R,
}

impl<R: Scalar> Default for StepConfig<R> {
    fn default() -> Self {
        Self {
            dt: R::c(0.05),
            resolution_passes: 8,
            restitution: R::zero(),
            max_speed: R::c(1.0),
        }
    }
}

impl<R: Scalar> WorldState<R> {
    pub fn new(bounds: Aabb<R>, gravity: Vec2<R>) -> Self {
        Self { bodies: Vec::new(), gravity, time: R::zero(), bounds }
    }

    pub fn add_kinematic(&mut self, shapes: Vec<Obb<R>>, pose: Pose2<R>) -> usize {
        assert!(!shapes.is_empty(), "kinematic bodies need at least one shape");
        let id = self.bodies.len();
        self.bodies.push(Body {
            id,
            kind: BodyKind::Kinematic { shapes, pose, velocity: KinematicVelocity::default() },
        });
        id
    }

    pub fn add_disc(&mut self, circle: Circle<R>, dynamic: bool) -> usize {
        let id = self.bodies.len();
        self.bodies.push(Body { id, kind: BodyKind::Disc { circle, velocity: Vec2::zero(), dynamic } });
        id
    }

    pub fn kinematic_pose(&self, id: usize) -> Pose2<R> {
        match &self.bodies[id].kind {
            BodyKind::Kinematic { pose, .. } => *pose,
            _ => panic!("body {id} is not kinematic"),
        }
    }

    pub fn set_kinematic_pose(&mut self, id: usize, new_pose: Pose2<R>) {
        match &mut self.bodies[id].kind {
            BodyKind::Kinematic { pose, .. } => *pose = new_pose,
            _ => panic!("body {id} is not kinematic"),
        }
    }

    pub fn set_kinematic_velocity(&mut self, id: usize, v: KinematicVelocity<R>) {
        match &mut self.bodies[id].kind {
            BodyKind::Kinematic { velocity, .. } => *velocity = v,
            _ => panic!("body {id} is not kinematic"),
        }
    }

    pub fn set_kinematic_shapes(&mut self, id: usize, new_shapes: Vec<Obb<R>>) {
        assert!(!new_shapes.is_empty());
        match &mut self.bodies[id].kind {
            BodyKind::Kinematic { shapes, .. } => *shapes = new_shapes,
            _ => panic!("body {id} is not kinematic"),
        }
    }

    pub fn disc_position(&self, id: usize) -> Vec2<R> {
        match &self.bodies[id].kind {
            BodyKind::Disc { circle, .. } => circle.center,
            _ => panic!("body {id} is not a disc"),
        }
    }

    pub fn disc_velocity(&self, id: usize) -> Vec2<R> {
        match &self.bodies[id].kind {
            BodyKind::Disc { velocity, .. } => *velocity,
            _ => panic!("body {id} is not a disc"),
        }
    }

    pub fn set_disc_position(&mut self, id: usize, p: Vec2<R>) {
        match &mut self.bodies[id].kind {
            BodyKind::Disc { circle, .. } => circle.center = p,
            _ => panic!("body {id} is not a disc"),
        }
    }

    /// Flip a disc between held (static) and simulated (dynamic).
    pub fn set_disc_dynamic(&mut self, id: usize, is_dynamic: bool) {
        match &mut self.bodies[id].kind {
            BodyKind::Disc { dynamic, velocity, .. } => {
                *dynamic = is_dynamic;
                if !is_dynamic {
                    *velocity = Vec2::zero();
                }
            }
            _ => panic!("body {id} is not a disc"),
        }
    }

    /// World-frame shapes of a kinematic body.
    pub fn shapes_world(&self, id: usize) -> Vec<Obb<R>> {
        match &self.bodies[id].kind {
            BodyKind::Kinematic { shapes, pose, .. } => {
                shapes.iter().map(|s| s.transformed(*pose)).collect()
            }
            _ => panic!("body {id} is not kinematic"),
        }
    }

    fn validate_velocities(&self) -> Result<(), PhysicsError> {
        for b in &self.bodies {
            let ok = match &b.kind {
                BodyKind::Kinematic { velocity, .. } => {
                    velocity.linear.is_finite() && velocity.angular.is_finite()
                }
                BodyKind::Disc { velocity, .. } => velocity.is_finite(),
            };
            if !ok {
                return Err(PhysicsError::NonFiniteVelocity(b.id));
            }
        }
        Ok(())
    }
}

/// Largest kinematic-disc penetration depth in the world. Zero when clean.
pub fn max_penetration<R: Scalar>(world: &WorldState<R>) -> R {
    let mut worst = R::zero();
    for body in &world.bodies {
        if let BodyKind::Kinematic { shapes, pose, .. } = &body.kind {
            for shape in shapes {
                let world_shape = shape.transformed(*pose);
                for other in &world.bodies {
                    if let BodyKind::Disc { circle, .. } = &other.kind {
                        if let Some(c) = circle_obb_contact(circle, &world_shape) {
                            worst = worst.max(c.depth);
                        }
                    }
                }
            }
        }
    }
    worst
}

/// One resolution sweep: kinematic-disc projections in ascending
/// (kinematic id, disc id, shape index) order, then disc-disc splits in
/// ascending (i, j) order, then the bounds clamp.
fn resolve_pass<R: Scalar>(world: &mut WorldState<R>, cfg: &StepConfig<R>) {
    let n = world.bodies.len();

    // Kinematic world shapes are fixed during resolution (only discs move).
    let mut kin: Vec<(usize, Vec<Obb<R>>, Vec2<R>, KinematicVelocity<R>)> = Vec::new();
    for b in &world.bodies {
        if let BodyKind::Kinematic { shapes, pose, velocity } = &b.kind {
            kin.push((
                b.id,
                shapes.iter().map(|s| s.transformed(*pose)).collect(),
                pose.position,
                *velocity,
            ));
        }
    }

    for (_, shapes, origin, vel) in &kin {
        for disc_id in 0..n {
            let (circle, dynamic) = match &world.bodies[disc_id].kind {
                BodyKind::Disc { circle, dynamic, .. } => (*circle, *dynamic),
                _ => continue,
            };
            if !dynamic {
                continue;
            }
            let mut center = circle.center;
            for shape in shapes {
                let current = Circle { center, radius: circle.radius };
                if let Some(contact) = circle_obb_contact(&current, shape) {
                    center = center + contact.normal.scale(contact.depth);
                    // Surface velocity of the pushing body at the disc center.
                    let r = center - *origin;
                    let surf = vel.linear + r.perp().scale(vel.angular);
                    let s = surf.dot(contact.normal);
                    if let BodyKind::Disc { velocity, .. } = &mut world.bodies[disc_id].kind {
                        let vn = velocity.dot(contact.normal);
                        if s > vn {
                            *velocity = *velocity + contact.normal.scale(s - vn);
                            clamp_speed(velocity, cfg.max_speed);
                        }
                    }
                }
            }
            if let BodyKind::Disc { circle, .. } = &mut world.bodies[disc_id].kind {
                circle.center = center;
            }
        }
    }

    // Disc-disc: split the projection equally between two dynamic discs;
    // a static disc takes none of it.
    for i in 0..n {
        for j in (i + 1)..n {
            let (ci, di) = match &world.bodies[i].kind {
                BodyKind::Disc { circle, dynamic, .. } => (*circle, *dynamic),
                _ => continue,
            };
            let (cj, dj) = match &world.bodies[j].kind {
                BodyKind::Disc { circle, dynamic, .. } => (*circle, *dynamic),
                _ => continue,
            };
            if !di && !dj {
                continue;
            }
            let delta = ci.center - cj.center;
            let dist = delta.norm();
            let depth = ci.radius + cj.radius - dist;
            if depth <= R::zero() {
                continue;
            }
            // Coincident centers: deterministic +x separation.
            let normal = if dist > R::zero() { delta.scale(R::one() / dist) } else { Vec2::new(R::one(), R::zero()) };
            let (move_i, move_j) = match (di, dj) {
                (true, true) => (depth * R::c(0.5), depth * R::c(0.5)),
                (true, false) => (depth, R::zero()),
                (false, true) => (R::zero(), depth),
                (false, false) => unreachable!(),
            };
            if di {
                if let BodyKind::Disc { circle, velocity, .. } = &mut world.bodies[i].kind {
                    circle.center = circle.center + normal.scale(move_i);
                    let vn = velocity.dot(normal);
                    if vn < R::zero() {
                        *velocity = *velocity - normal.scale(vn);
                    }
                }
            }
            if dj {
                if let BodyKind::Disc { circle, velocity, .. } = &mut world.bodies[j].kind {
                    circle.center = circle.center - normal.scale(move_j);
                    let vn = velocity.dot(-normal);
                    if vn < R::zero() {
                        *velocity = *velocity + normal.scale(vn);
                    }
                }
            }
        }
    }

    clamp_discs_to_bounds(world);
}

fn clamp_speed<R: Scalar>(v: &mut Vec2<R>, max_speed: R) {
    let speed = v.norm();
    if speed > max_speed {
        *v = v.scale(max_speed / speed);
    }
}

fn clamp_discs_to_bounds<R: Scalar>(world: &mut WorldState<R>) {
    let bounds = world.bounds;
    for b in &mut world.bodies {
        if let BodyKind::Disc { circle, velocity, dynamic } = &mut b.kind {
            if !*dynamic {
                continue;
            }
            let r = circle.radius;
            let lo = Vec2::new(bounds.min.x + r, bounds.min.y + r);
            let hi = Vec2::new(bounds.max.x - r, bounds.max.y - r);
            if circle.center.x < lo.x {
                circle.center.x = lo.x;
                velocity.x = velocity.x.max(R::zero());
            } else if circle.center.x > hi.x {
                circle.center.x = hi.x;
                velocity.x = velocity.x.min(R::zero());
            }
            if circle.center.y < lo.y {
                circle.center.y = lo.y;
                velocity.y = velocity.y.max(R::zero());
            } else if circle.center.y > hi.y {
                circle.center.y = hi.y;
                velocity.y = velocity.y.min(R::zero());
            }
        }
    }
}

/// Run the contact solver on the current state: `resolution_passes` sweeps.
/// A world with no overlaps is a fixpoint.
pub fn resolve_contacts<R: Scalar>(world: &mut WorldState<R>, cfg: &StepConfig<R>) {
    for _ in 0..cfg.resolution_passes {
        resolve_pass(world, cfg);
    }
}

/// Advance the world by one tick: kinematics follow their velocities, discs
/// integrate gravity and velocity, contacts resolve, bounds clamp, time
/// advances. Bit-deterministic given (world, cfg).
pub fn step<R: Scalar>(world: &mut WorldState<R>, cfg: &StepConfig<R>) -> Result<(), PhysicsError> {
    debug_assert!(cfg.dt > R::zero() && cfg.resolution_passes >= 1);
    debug_assert!(cfg.restitution == R::zero(), "contact model is restitution-free");
    world.validate_velocities()?;

    let dt = cfg.dt;
    let gravity = world.gravity;
    for b in &mut world.bodies {
        match &mut b.kind {
            BodyKind::Kinematic { pose, velocity, .. } => {
                pose.position = pose.position + velocity.linear.scale(dt);
                pose.angle = wrap_angle(pose.angle + velocity.angular * dt);
            }
            BodyKind::Disc { circle, velocity, dynamic } => {
                if *dynamic {
                    *velocity = *velocity + gravity.scale(dt);
                    clamp_speed(velocity, cfg.max_speed);
                    circle.center = circle.center + velocity.scale(dt);
                }
            }
        }
    }

    resolve_contacts(world, cfg);
    clamp_discs_to_bounds(world);
    world.time = world.time + dt;
    Ok(())
}

/// Functional form of [`step`]; returns the advanced world.
pub fn stepped<R: Scalar>(world: &WorldState<R>, cfg: &StepConfig<R>) -> Result<WorldState<R>, PhysicsError> {
    let mut next = world.clone();
    step(&mut next, cfg)?;
    Ok(next)
}

/// Zero all kinematic velocities, then step until every dynamic disc is
/// slower than `eps` or `max_steps` is hit. Returns the number of steps taken.
///
/// At least one step runs (when `max_steps` allows): a disc hanging in the
/// air starts at speed zero and only picks up gravity once stepped, so the
/// speed check happens after each step, not before the first.
pub fn settle<R: Scalar>(
    world: &mut WorldState<R>,
    cfg: &StepConfig<R>,
    max_steps: usize,
    eps: R,
) -> Result<usize, PhysicsError> {
    for b in &mut world.bodies {
        if let BodyKind::Kinematic { velocity, .. } = &mut b.kind {
            *velocity = KinematicVelocity::default();
        }
    }
    let all_slow = |w: &WorldState<R>| {
        w.bodies.iter().all(|b| match &b.kind {
            BodyKind::Disc { velocity, dynamic, .. } => !*dynamic || velocity.norm() < eps,
            _ => true,
        })
    };
    let mut taken = 0;
    while taken < max_steps {
        step(world, cfg)?;
        taken += 1;
        if all_slow(world) {
            break;
        }
    }
    Ok(taken)
}
