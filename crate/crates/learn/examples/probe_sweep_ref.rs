// Sweeping manip learnability with a sane reference tool family: the
// hand-fixture U container + forward blade, encoded as a genome.
use toolforge_core::tasks::{TaskKind, TaskSpec};
use toolforge_learn::builder::{GENOME_STEP};
use toolforge_learn::envs::ManipEnv;
use toolforge_learn::train::{train_manip_policy, ManipTrainConfig};

// raw = inverse of the action scales: dx_raw = dx/0.06, size_raw = (s-0.05)/0.03
fn step(wrist: f64, dx: f64, dy: f64, dth: f64, w: f64, h: f64) -> [f64; GENOME_STEP] {
    [wrist, dx / 0.06, dy / 0.06, dth / 0.8, (w - 0.05) / 0.03, (h - 0.05) / 0.03, -3.0]
}

fn main() {
    let spec = TaskSpec::standard(TaskKind::Sweeping);
    let mut genome: Vec<f64> = Vec::new();
    // container (left): back wall + two side walls opening +x
    genome.extend_from_slice(&step(-1.0, 0.04, 0.0, 0.0, 0.02, 0.10));
    genome.extend_from_slice(&step(-1.0, 0.06, 0.06, 0.0, 0.10, 0.02));
    genome.extend_from_slice(&step(-1.0, 0.0, -0.12, 0.0, 0.10, 0.02));
    // sweeper (right): two-segment forward blade
    genome.extend_from_slice(&step(1.0, 0.06, 0.0, 0.0, 0.02, 0.10));
    genome.extend_from_slice(&step(1.0, 0.05, 0.0, 0.0, 0.02, 0.08));
    let mut stop = [0.0; GENOME_STEP];
    stop[6] = 3.0;
    genome.extend_from_slice(&stop);

    // check the genome scripted success
    let mdp = toolforge_core::build::MdpConfig::default();
    let rate = toolforge_learn::builder::genome_success_rate(&spec, mdp, &genome, 50, 1);
    println!("reference genome scripted success: {rate:.2}");

    let lad: Vec<f64> = match std::env::args().nth(1).as_deref() {
        Some("wide") => vec![0.05, 0.3, 0.6],
        _ => vec![0.05],
    };
    let mut tcfg = ManipTrainConfig::default();
    tcfg.tool_mix = lad.iter().map(|&n| toolforge_learn::envs::ToolDraw::genome(n)).collect();
    let t0 = std::time::Instant::now();
    let (policy, curve) = train_manip_policy(&spec, &genome, &tcfg, 3).unwrap();
    println!("trained in {:.0}s; tail {:?}", t0.elapsed().as_secs_f32(),
        curve.iter().rev().take(5).map(|v| (v * 100.0).round() / 100.0).collect::<Vec<_>>());
    let mut env = ManipEnv::new(spec.clone(), genome.clone());
    env.tool_mix = lad.iter().map(|&n| toolforge_learn::envs::ToolDraw::genome(n)).collect();
    let mut wins = 0;
    for i in 0..100u64 {
        let es = toolforge_core::rng::DetRng::keyed(&[991, i]).next_u64();
        let (_, ok) = env.episode(es, |input, rng| {
            let out = policy.forward_trunk(input);
            let s = policy.sample(&out, rng);
            ((toolforge_learn::envs::squash_motion(&s.gauss, false)), None)
        });
        wins += ok as usize;
    }
    println!("sweeping ref-tool sampled-eval {}/100, zero {:.2}", wins, env.zero_policy_success(50, 99));
}
