//! Fixed privileged motion controllers driven through the manipulation
//! environment. They stand in for "a competent simple policy" when ranking
//! tool genomes: a tool no straight-line controller can use is a tool no
//! learned policy will manage either.

use crate::envs::{ManipEnv, ToolDraw};
use toolforge_core::rng::DetRng;
use toolforge_core::tasks::{reset, TaskKind, TaskSpec};
use toolforge_core::Vec2;

const V: f64 = 0.19;

/// Success rate of the per-task probe controller over `n` seeded episodes,
/// with tools drawn from the genome at low noise.
pub fn probe_controller_success(
    spec: &TaskSpec,
    genome: &[f64],
    n: usize,
    seed: u64,
) -> f64 {
    let mut env = ManipEnv::new(spec.clone(), genome.to_vec());
    env.tool_mix = vec![ToolDraw::genome(0.05)];
    env.start_jitter = false;

    let mut wins = 0;
    for i in 0..n {
        let es = DetRng::keyed(&[seed, 0x9B0E, i as u64]).next_u64();
        let scene0 = reset(spec, es);
        let target0 = scene0.target_position();
        let origin = spec.robot_origin;
        let dir = (target0 - origin).normalized();
        let drop = scene0.drop_point;
        let interior = scene0.container_interior;

        let mut phase = 0usize;
        let mut hold = 0usize;
        let (_, ok) = env.episode(es, |input, _rng| {
            let nd = input.data.len();
            let w = Vec2::new(input.data[nd - 3] as f64, input.data[nd - 2] as f64);
            match spec.kind {
                TaskKind::HookAndGrasp => {
                    // Advance along the ray, then pull straight home. The
                    // tip clears the disc when the wrist is within a tool
                    // length; advancing a fixed 0.3 m past engage suffices
                    // for full-length tools.
                    let along = (w - origin).dot(dir);
                    if phase == 0 && along > 0.42 {
                        phase = 1;
                    }
                    let v = if phase == 0 { dir.scale(V) } else { dir.scale(-V) };
                    ((v, 0.0), None)
                }
                TaskKind::Sweeping => ((dir.scale(V), 0.0), None),
                TaskKind::Decanting => {
                    let drop = drop.expect("decanting scene");
                    let interior = interior.expect("decanting scene");
                    match phase {
                        0 => {
                            // Center under the drop point and wait for the
                            // particle to land and settle.
                            let dx = drop.x - w.x;
                            if dx.abs() < 0.015 {
                                hold += 1;
                                if hold > 14 {
                                    phase = 1;
                                }
                                ((Vec2::zero(), 0.0), None)
                            } else {
                                ((Vec2::new(dx.signum() * V * 0.7, 0.0), 0.0), None)
                            }
                        }
                        1 => {
                            // Carry above the container rim.
                            let goal = Vec2::new(interior.center().x, 0.42);
                            let dp = goal - w;
                            if dp.norm() < 0.03 {
                                phase = 2;
                                ((Vec2::zero(), 0.0), None)
                            } else {
                                ((dp.normalized().scale(V * 0.7), 0.0), None)
                            }
                        }
                        _ => ((Vec2::zero(), 0.75), None), // pour
                    }
                }
            }
        });
        wins += ok as usize;
    }
    wins as f64 / n as f64
}
