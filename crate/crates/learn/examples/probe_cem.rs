use std::time::Instant;
use toolforge_core::build::MdpConfig;
use toolforge_core::tasks::{TaskKind, TaskSpec};
use toolforge_learn::builder::{search_tool_sequence, ToolSearchConfig};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let task = match args.get(1).map(|s| s.as_str()) {
        Some("sweep") => TaskKind::Sweeping,
        Some("decant") => TaskKind::Decanting,
        _ => TaskKind::HookAndGrasp,
    };
    let spec = TaskSpec::standard(task);
    let mdp = MdpConfig::default();
    let cfg = ToolSearchConfig {
        iterations: 36,
        max_evaluations: Some(19_000),
        early_success_target: Some(0.8),
        ..Default::default()
    };
    for seed in 0..3u64 {
        let t0 = Instant::now();
        let out = search_tool_sequence(&spec, mdp, &cfg, seed);
        println!(
            "{:?} seed {seed}: best_obj={:.3} fresh_rate={:.2} evals={} iters={} time={:.1}s",
            task,
            out.cem.best_objective,
            out.fresh_success_rate,
            out.evaluations,
            out.cem.history.len(),
            t0.elapsed().as_secs_f32()
        );
    }
}
