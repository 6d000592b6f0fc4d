use toolforge_core::build::MdpConfig;
use toolforge_core::rng::DetRng;
use toolforge_core::tasks::{TaskKind, TaskSpec};
use toolforge_learn::builder::{genome_to_flat_actions, GENOME_STEP};
use rayon::prelude::*;

fn main() {
    let mdp = MdpConfig::default();
    for task in TaskKind::ALL {
        let spec = TaskSpec::standard(task);
        // Random genomes from the CEM init distribution.
        let wins: usize = (0..200usize)
            .into_par_iter()
            .map(|i| {
                let mut rng = DetRng::keyed(&[42, i as u64]);
                let blocks = 8;
                let mut genome = vec![0.0; blocks * GENOME_STEP];
                for b in 0..blocks {
                    for d in 0..GENOME_STEP {
                        let (mean, std) = match d {
                            1 => (1.0, 1.0),
                            6 => (-1.5, 0.5),
                            _ => (0.0, 1.0),
                        };
                        genome[b * GENOME_STEP + d] = mean + std * rng.gaussian();
                    }
                }
                let flat = genome_to_flat_actions(&genome);
                let rec = toolforge_core::build::run_sequence(&spec, mdp, rng.next_u64(), &flat);
                rec.success as usize
            })
            .sum();
        println!("{task:?}: random-tool success {}/200", wins);
    }
}
