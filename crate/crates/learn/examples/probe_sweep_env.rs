use toolforge_core::build::MdpConfig;
use toolforge_core::rng::DetRng;
use toolforge_core::tasks::*;
use toolforge_core::tool::WristSide;
use toolforge_learn::builder::{search_tool_sequence, tool_from_genome, ToolSearchConfig};
use toolforge_learn::envs::{squash_motion, ManipEnv};
use toolforge_learn::train::{train_manip_policy, ManipTrainConfig};

fn main() {
    let spec = TaskSpec::standard(TaskKind::Sweeping);
    let mdp = MdpConfig::default();
    let search = search_tool_sequence(&spec, mdp, &ToolSearchConfig { iterations: 10, early_success_target: Some(0.9), ..Default::default() }, 7);
    println!("genome fresh {:.2}", search.fresh_success_rate);
    let tool = tool_from_genome(&spec, &search.cem.best, None);
    println!("left (container) chain:");
    for s in tool.body_frame_shapes(WristSide::Left) {
        println!("  c=({:.3},{:.3}) h=({:.3},{:.3})", s.center.x, s.center.y, s.half_extents.x, s.half_extents.y);
    }
    println!("right (sweeper) chain:");
    for s in tool.body_frame_shapes(WristSide::Right) {
        println!("  c=({:.3},{:.3}) h=({:.3},{:.3})", s.center.x, s.center.y, s.half_extents.x, s.half_extents.y);
    }
    let (policy, _) = train_manip_policy(&spec, &search.cem.best, &ManipTrainConfig::default(), 3).unwrap();
    let mut env = ManipEnv::new(spec.clone(), search.cem.best.clone());
    
    for i in 0..12 {
        let seed = DetRng::keyed(&[991, i]).next_u64();
        let scene0 = reset(&spec, seed);
        let t0 = scene0.target_position();
        let mut decisions = 0;
        let (trace, ok) = env.episode(seed, |input, rng| {
            decisions += 1;
            let out = policy.forward_trunk(input);
            let s = policy.sample(&out, rng);
            let (v, w) = squash_motion(&s.gauss, false);
            ((v, w), None)
        });
        let ret: f64 = trace.rewards.iter().sum();
        println!("ep {i}: t0=({:.2},{:.2}) decisions={decisions} return={ret:.2} success={ok}", t0.x, t0.y);
    }
}
