use toolforge_core::build::MdpConfig;
use toolforge_core::rng::DetRng;
use toolforge_core::tasks::{TaskKind, TaskSpec};
use toolforge_core::tool::WristSide;
use toolforge_learn::builder::{search_tool_sequence, tool_from_genome, ToolSearchConfig};
use toolforge_learn::envs::{squash_motion, ManipEnv};
use toolforge_learn::policy::PolicyNet;
use toolforge_learn::reinforce::{reinforce_train, ReinforceConfig};
use toolforge_learn::train::new_manip_policy;

fn sampled_success(env: &ManipEnv, policy: &PolicyNet, n: usize, seed: u64) -> f64 {
    let mut wins = 0;
    for i in 0..n {
        let es = DetRng::keyed(&[seed, i as u64]).next_u64();
        let (_, ok) = env.episode(es, |input, rng| {
            let out = policy.forward_trunk(input);
            let s = policy.sample(&out, rng);
            let (v, w) = squash_motion(&s.gauss, false);
            ((v, w), None)
        });
        wins += ok as usize;
    }
    wins as f64 / n as f64
}

fn main() {
    let task = match std::env::args().nth(1).as_deref() {
        Some("sweep") => TaskKind::Sweeping,
        Some("decant") => TaskKind::Decanting,
        _ => TaskKind::HookAndGrasp,
    };
    let spec = TaskSpec::standard(task);
    let mdp = MdpConfig::default();
    let search = search_tool_sequence(&spec, mdp, &ToolSearchConfig { iterations: 10, early_success_target: Some(0.9), ..Default::default() }, 7);
    println!("genome fresh rate {:.2}", search.fresh_success_rate);
    let tool = tool_from_genome(&spec, &search.cem.best, None);
    for (i, s) in tool.body_frame_shapes(WristSide::Right).iter().enumerate() {
        println!("  block {i}: c=({:.3},{:.3}) h=({:.3},{:.3}) a={:.2}", s.center.x, s.center.y, s.half_extents.x, s.half_extents.y, s.angle);
    }

    let mut policy = new_manip_policy(3);
    let rc = ReinforceConfig { gamma: 1.0, lr: 2e-3, batch_size: 32, batches: 50, ..Default::default() };
    for (phase, difficulty) in [(0, 0.15), (1, 0.15), (2, 0.4), (3, 0.4), (4, 0.7), (5, 1.0), (6, 1.0), (7, 1.0)] {
        let mut env = ManipEnv::new(spec.clone(), search.cem.best.clone());
        env.curriculum = difficulty;
        
        let curve = reinforce_train(&env, &mut policy, &rc, 100 + phase).unwrap();
        let m = curve.iter().rev().take(10).sum::<f64>() / 10.0;
        let ss = sampled_success(&env, &policy, 40, 900 + phase);
        println!("phase {phase} diff {difficulty}: last10-return {m:.2} sampled-success {ss:.2}");
    }
    let mut env = ManipEnv::new(spec.clone(), search.cem.best.clone());
    
    println!("final mode-eval: {:.2}", env.eval_success(&policy, 100, 99));
    println!("zero: {:.2}", env.zero_policy_success(100, 99));
}
