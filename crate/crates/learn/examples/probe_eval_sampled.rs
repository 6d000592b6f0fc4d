use toolforge_core::build::MdpConfig;
use toolforge_core::tasks::{TaskKind, TaskSpec};
use toolforge_learn::builder::{search_tool_sequence, ToolSearchConfig};
use toolforge_learn::envs::ManipEnv;
use toolforge_learn::train::{train_manip_policy, ManipTrainConfig};

fn main() {
    let task = match std::env::args().nth(1).as_deref() {
        Some("sweep") => TaskKind::Sweeping,
        Some("decant") => TaskKind::Decanting,
        _ => TaskKind::HookAndGrasp,
    };
    let spec = TaskSpec::standard(task);
    let mdp = MdpConfig::default();
    let (genome, robust) = toolforge_learn::builder::robust_tool_search(
        &spec, mdp,
        &ToolSearchConfig { iterations: 12, early_success_target: Some(0.9), ..Default::default() },
        4, 7,
    );
    println!("robust rate {robust:.2}");
    let t0 = std::time::Instant::now();
    let mut tcfg = ManipTrainConfig::default_for(task);
    if std::env::args().nth(2).as_deref() == Some("fixed") {
        tcfg.tool_mix = vec![toolforge_learn::envs::ToolDraw::genome(0.05)];
    }
    let (policy, curve) = train_manip_policy(&spec, &genome, &tcfg, 3).unwrap();
    println!("trained in {:.0}s; curve tail {:?}", t0.elapsed().as_secs_f32(),
        &curve.iter().rev().take(5).map(|v| (v * 100.0).round() / 100.0).collect::<Vec<_>>());
    let mut env = ManipEnv::new(spec.clone(), genome.clone());
    if std::env::args().nth(2).as_deref() == Some("fixed") {
        env.tool_mix = vec![toolforge_learn::envs::ToolDraw::genome(0.05)];
    }
    
    // sampled-policy eval (the trained object is stochastic)
    let mut wins = 0;
    let n = 100;
    for i in 0..n {
        let es = toolforge_core::rng::DetRng::keyed(&[991, i]).next_u64();
        let (_, ok) = env.episode(es, |input, rng| {
            let out = policy.forward_trunk(input);
            let s = policy.sample(&out, rng);
            let (v, w) = toolforge_learn::envs::squash_motion(&s.gauss, false);
            ((v, w), None)
        });
        wins += ok as usize;
    }
    println!("{task:?}: sampled-eval {}/{n} zero {:.2}", wins, env.zero_policy_success(50, 99));
}
