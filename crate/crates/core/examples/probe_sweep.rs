use toolforge_core::geom::{Pose2, Vec2};
use toolforge_core::tasks::*;
use toolforge_core::tool::{BlockSpec, ToolAssembly, WristSide};
type V = Vec2<f64>;
fn block(dx: f64, dy: f64, dtheta: f64, w: f64, h: f64, wrist: WristSide) -> BlockSpec<f64> {
    BlockSpec { rel_offset: V::new(dx, dy), rel_angle: dtheta, size: V::new(w, h), wrist }
}
fn main() {
    let s = TaskSpec::standard(TaskKind::Sweeping);
    let mut t = ToolAssembly::new(Pose2::new(s.robot_origin, 0.0), s.bounds);
    t.append_block(block(0.04, 0.0, 0.0, 0.02, 0.10, WristSide::Left)).unwrap();
    t.append_block(block(0.06, 0.06, 0.0, 0.10, 0.02, WristSide::Left)).unwrap();
    t.append_block(block(0.0, -0.12, 0.0, 0.10, 0.02, WristSide::Left)).unwrap();
    t.append_block(block(0.06, 0.0, 0.0, 0.02, 0.10, WristSide::Right)).unwrap();
    for sh in t.body_frame_shapes(WristSide::Left) {
        println!("container shape: c=({:.3},{:.3}) h=({:.3},{:.3})", sh.center.x, sh.center.y, sh.half_extents.x, sh.half_extents.y);
    }
    let mut wins = 0;
    for seed in 0..20 {
        let scene = reset(&s, seed);
        let target0 = scene.target_position();
        let out = scripted_strategy(&s, &t, &scene);
        let final_w = out.trajectory.last().unwrap();
        let disc = final_w.disc_position(scene.target_ids[0]);
        let cpose = final_w.kinematic_pose(2);
        println!("seed {seed}: success={} steps={} target0=({:.3},{:.3}) disc_end=({:.3},{:.3}) container=({:.3},{:.3})",
            out.success, out.steps_used, target0.x, target0.y, disc.x, disc.y, cpose.position.x, cpose.position.y);
        wins += out.success as usize;
    }
    println!("total {wins}/20");
}
