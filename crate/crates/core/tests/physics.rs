//! Physics fixtures: pushing, settling, containment, determinism, and the
//! fuzzed non-penetration sweep.

use toolforge_core::geom::{Aabb, Circle, Obb, Pose2, Vec2};
use toolforge_core::phys::{
    max_penetration, settle, step, BodyKind, KinematicVelocity, StepConfig, WorldState,
};
use toolforge_core::rng::DetRng;

type V = Vec2<f64>;

fn bounds() -> Aabb<f64> {
    Aabb::new(V::new(-1.0, -1.0), V::new(1.0, 1.0))
}

fn world_topdown() -> WorldState<f64> {
    WorldState::new(bounds(), V::zero())
}

fn world_gravity() -> WorldState<f64> {
    WorldState::new(bounds(), V::new(0.0, -9.81))
}

#[test]
fn empty_world_only_time_advances() {
    let mut w = world_topdown();
    let before = serde_json::to_string(&w.bodies).unwrap();
    step(&mut w, &StepConfig::default()).unwrap();
    assert_eq!(serde_json::to_string(&w.bodies).unwrap(), before);
    assert!((w.time - 0.05).abs() < 1e-15);
}

#[test]
fn resting_disc_without_gravity_stays_put() {
    let mut w = world_topdown();
    let id = w.add_disc(Circle::new(V::new(0.2, 0.1), 0.03), true);
    for _ in 0..50 {
        step(&mut w, &StepConfig::default()).unwrap();
    }
    assert_eq!(w.disc_position(id), V::new(0.2, 0.1));
}

#[test]
fn kinematic_square_pushes_disc_without_penetration() {
    let mut w = world_topdown();
    let kin = w.add_kinematic(
        vec![Obb::new(V::zero(), V::new(0.05, 0.05), 0.0)],
        Pose2::new(V::new(-0.2, 0.0), 0.0),
    );
    let disc = w.add_disc(Circle::new(V::new(0.0, 0.0), 0.03), true);
    w.set_kinematic_velocity(kin, KinematicVelocity { linear: V::new(0.1, 0.0), angular: 0.0 });
    let cfg = StepConfig::default();
    for _ in 0..100 {
        step(&mut w, &cfg).unwrap();
        assert!(max_penetration(&w) <= 1e-4, "penetration {}", max_penetration(&w));
    }
    // 100 steps at 0.1 m/s: square face reaches -0.2+0.5+0.05 = 0.35; the
    // disc must ride ahead of the leading face.
    let face_x = w.kinematic_pose(kin).position.x + 0.05;
    assert!(w.disc_position(disc).x >= face_x - 1e-6);
    assert!(w.disc_position(disc).x >= 0.35 + 0.03 - 1e-4);
}

#[test]
fn resolve_is_fixpoint_without_overlaps() {
    let mut w = world_topdown();
    w.add_kinematic(vec![Obb::new(V::zero(), V::new(0.05, 0.05), 0.3)], Pose2::new(V::new(-0.5, 0.0), 0.0));
    w.add_disc(Circle::new(V::new(0.4, 0.2), 0.05), true);
    w.add_disc(Circle::new(V::new(0.1, -0.3), 0.04), true);
    let before = serde_json::to_string(&w).unwrap();
    toolforge_core::phys::resolve_contacts(&mut w, &StepConfig::default());
    assert_eq!(serde_json::to_string(&w).unwrap(), before);
}

#[test]
fn disc_centered_on_face_projects_out_by_radius() {
    let mut w = world_topdown();
    w.add_kinematic(vec![Obb::new(V::zero(), V::new(0.1, 0.1), 0.0)], Pose2::identity());
    // Disc center exactly on the +x face.
    let disc = w.add_disc(Circle::new(V::new(0.1, 0.0), 0.04), true);
    toolforge_core::phys::resolve_contacts(&mut w, &StepConfig::default());
    let p = w.disc_position(disc);
    assert!((p.x - 0.14).abs() < 1e-12, "pushed out along +x by radius, got {p:?}");
    assert_eq!(p.y, 0.0);
}

/// Three blocks forming a U-shaped cavity opening +y.
fn u_cavity(center: V) -> Vec<Obb<f64>> {
    vec![
        Obb::new(center + V::new(0.0, -0.05), V::new(0.09, 0.01), 0.0),
        Obb::new(center + V::new(-0.08, 0.02), V::new(0.01, 0.06), 0.0),
        Obb::new(center + V::new(0.08, 0.02), V::new(0.01, 0.06), 0.0),
    ]
}

#[test]
fn wedged_disc_resolves_inside_cavity() {
    let mut w = world_topdown();
    let kin = w.add_kinematic(u_cavity(V::zero()), Pose2::identity());
    // Start the disc overlapping the bottom and one wall.
    let disc = w.add_disc(Circle::new(V::new(-0.055, -0.035), 0.035), true);
    toolforge_core::phys::resolve_contacts(&mut w, &StepConfig::default());
    assert!(max_penetration(&w) <= 1e-4);
    let p = w.disc_position(disc);
    let cavity_mouth = Aabb::new(V::new(-0.07, -0.04), V::new(0.07, 0.1));
    assert!(cavity_mouth.contains(p), "disc left the cavity: {p:?}");
    let _ = kin;
}

#[test]
fn particle_settles_on_ledge_at_analytic_height() {
    let mut w = world_gravity();
    // Block-thick ledge, top face at y = 0.0. At the 1.0 m/s speed cap a
    // disc travels 0.05 m per step, so the ledge must be at least that thick
    // for the midplane to stay uncrossable.
    w.add_kinematic(vec![Obb::new(V::new(0.0, -0.05), V::new(0.2, 0.05), 0.0)], Pose2::identity());
    let p = w.add_disc(Circle::new(V::new(0.0, 0.2), 0.02), true);
    let taken = settle(&mut w, &StepConfig::default(), 400, 1e-3).unwrap();
    assert!(taken < 400, "did not settle");
    let rest = w.disc_position(p);
    assert!((rest.y - 0.02).abs() < 1e-3, "rest height {}", rest.y);
    assert_eq!(rest.x, 0.0);
}

#[test]
fn already_settled_world_keeps_position() {
    let mut w = world_gravity();
    w.add_kinematic(vec![Obb::new(V::new(0.0, -0.05), V::new(0.2, 0.05), 0.0)], Pose2::identity());
    let p = w.add_disc(Circle::new(V::new(0.05, 0.02), 0.02), true);
    settle(&mut w, &StepConfig::default(), 400, 1e-3).unwrap();
    let first = w.disc_position(p);
    settle(&mut w, &StepConfig::default(), 50, 1e-3).unwrap();
    let second = w.disc_position(p);
    assert!(first.dist(second) < 1e-9, "settled disc moved: {first:?} -> {second:?}");
}

#[test]
fn particle_dropped_into_cavity_stays_inside() {
    let mut w = world_gravity();
    w.add_kinematic(u_cavity(V::zero()), Pose2::identity());
    let p = w.add_disc(Circle::new(V::new(0.01, 0.3), 0.02), true);
    settle(&mut w, &StepConfig::default(), 600, 1e-3).unwrap();
    let rest = w.disc_position(p);
    let cavity = Aabb::new(V::new(-0.07, -0.04), V::new(0.07, 0.08));
    assert!(cavity.contains(rest), "rest {rest:?}");
    assert!((rest.y - (-0.02)).abs() < 1e-3, "resting on the floor: {}", rest.y);
}

#[test]
fn stepping_is_bit_deterministic() {
    let run = || {
        let mut w = world_gravity();
        let kin = w.add_kinematic(u_cavity(V::new(0.0, -0.2)), Pose2::identity());
        w.add_disc(Circle::new(V::new(0.03, 0.3), 0.02), true);
        w.add_disc(Circle::new(V::new(-0.02, 0.4), 0.025), true);
        let cfg = StepConfig::default();
        for i in 0..200 {
            let v = if i % 40 < 20 { 0.08 } else { -0.08 };
            w.set_kinematic_velocity(kin, KinematicVelocity { linear: V::new(v, 0.0), angular: 0.0 });
            step(&mut w, &cfg).unwrap();
        }
        serde_json::to_string(&w).unwrap()
    };
    assert_eq!(run(), run());
}

#[test]
fn fuzzed_steps_respect_penetration_and_bounds() {
    let mut rng = DetRng::keyed(&[404, 1]);
    let mut w = world_topdown();
    // One kinematic body roaming the interior plus three discs.
    let kin = w.add_kinematic(
        vec![
            Obb::new(V::zero(), V::new(0.08, 0.03), 0.0),
            Obb::new(V::new(0.08, 0.06), V::new(0.03, 0.06), 0.4),
        ],
        Pose2::identity(),
    );
    let discs = [
        w.add_disc(Circle::new(V::new(0.3, 0.2), 0.03), true),
        w.add_disc(Circle::new(V::new(-0.3, -0.2), 0.04), true),
        w.add_disc(Circle::new(V::new(0.2, -0.3), 0.05), true),
    ];
    let cfg = StepConfig::default();
    for step_i in 0..1000 {
        // Keep the kinematic body well inside the walls so a disc can always
        // escape between shape and boundary.
        let pose = w.kinematic_pose(kin);
        let steer = V::new(rng.range(-0.12, 0.12), rng.range(-0.12, 0.12));
        let recenter = V::new(-pose.position.x, -pose.position.y).scale(0.3);
        w.set_kinematic_velocity(
            kin,
            KinematicVelocity { linear: steer + recenter, angular: rng.range(-0.5, 0.5) },
        );
        step(&mut w, &cfg).unwrap();
        let pen = max_penetration(&w);
        assert!(pen <= 1e-4, "step {step_i}: penetration {pen}");
        for &d in &discs {
            let p = w.disc_position(d);
            let r = match &w.bodies[d].kind {
                BodyKind::Disc { circle, .. } => circle.radius,
                _ => unreachable!(),
            };
            assert!(p.x - r >= -1.0 - 1e-6 && p.x + r <= 1.0 + 1e-6);
            assert!(p.y - r >= -1.0 - 1e-6 && p.y + r <= 1.0 + 1e-6);
        }
    }
}

#[test]
fn enclosed_disc_translates_with_its_enclosure() {
    let mut w = world_topdown();
    // Closed box: interior exactly fits the disc (radius 0.03) so the
    // trailing wall starts in contact.
    let walls = vec![
        Obb::new(V::new(-0.04, 0.0), V::new(0.01, 0.05), 0.0),
        Obb::new(V::new(0.04, 0.0), V::new(0.01, 0.05), 0.0),
        Obb::new(V::new(0.0, 0.04), V::new(0.05, 0.01), 0.0),
        Obb::new(V::new(0.0, -0.04), V::new(0.05, 0.01), 0.0),
    ];
    let kin = w.add_kinematic(walls, Pose2::new(V::new(-0.5, 0.0), 0.0));
    let disc = w.add_disc(Circle::new(V::new(-0.5, 0.0), 0.03), true);
    w.set_kinematic_velocity(kin, KinematicVelocity { linear: V::new(0.1, 0.0), angular: 0.0 });
    let cfg = StepConfig::default();
    let start_body = w.kinematic_pose(kin).position;
    let start_disc = w.disc_position(disc);
    for _ in 0..200 {
        step(&mut w, &cfg).unwrap();
    }
    let body_moved = w.kinematic_pose(kin).position - start_body;
    let disc_moved = w.disc_position(disc) - start_disc;
    assert!((body_moved.x - 1.0).abs() < 1e-9, "traveled {body_moved:?}");
    let slip = (body_moved - disc_moved).norm();
    assert!(slip <= 1e-3, "slip {slip} over 1 m");
}

#[test]
fn non_finite_velocity_is_rejected() {
    let mut w = world_topdown();
    let kin = w.add_kinematic(vec![Obb::new(V::zero(), V::new(0.05, 0.05), 0.0)], Pose2::identity());
    // Struct literal: Vec2::new debug-asserts finiteness, but a corrupted
    // controller output arrives as raw field writes.
    let bad = Vec2 { x: f64::NAN, y: 0.0 };
    w.set_kinematic_velocity(kin, KinematicVelocity { linear: bad, angular: 0.0 });
    assert!(step(&mut w, &StepConfig::default()).is_err());
}

#[test]
fn static_discs_are_immovable_obstacles() {
    let mut w = world_topdown();
    let anchor = w.add_disc(Circle::new(V::new(0.0, 0.0), 0.05), false);
    let mover = w.add_disc(Circle::new(V::new(0.0, 0.09), 0.05), true);
    toolforge_core::phys::resolve_contacts(&mut w, &StepConfig::default());
    assert_eq!(w.disc_position(anchor), V::new(0.0, 0.0), "static disc pinned");
    let p = w.disc_position(mover);
    assert!((p.y - 0.10).abs() < 1e-9, "dynamic disc took the full projection: {p:?}");
}
