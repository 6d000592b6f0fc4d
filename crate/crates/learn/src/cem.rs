//! Cross-entropy method over flat real vectors: sample, rank, refit a
//! diagonal Gaussian. Doubles as the existence oracle for good tools when
//! the vector encodes an open-loop build-action sequence.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use toolforge_core::rng::DetRng;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CemConfig {
    pub population: usize,
    pub elite_frac: f64,
    pub iterations: usize,
    /// Initial standard deviation per dimension.
    pub init_std: Vec<f64>,
    /// Initial mean per dimension.
    pub init_mean: Vec<f64>,
    /// Refit std floor.
    pub std_floor: f64,
    /// Stop once this many objective evaluations have been consumed.
    pub max_evaluations: Option<usize>,
}

impl CemConfig {
    pub fn new(init_mean: Vec<f64>, init_std: Vec<f64>) -> Self {
        assert_eq!(init_mean.len(), init_std.len());
        Self {
            population: 64,
            elite_frac: 0.125,
            iterations: 50,
            init_std,
            init_mean,
            std_floor: 1e-3,
            max_evaluations: None,
        }
    }

    pub fn elite_count(&self) -> usize {
        ((self.population as f64 * self.elite_frac).round() as usize).max(1)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CemOutcome {
    pub best: Vec<f64>,
    pub best_objective: f64,
    /// Best-so-far objective after each completed iteration.
    pub history: Vec<f64>,
    pub evaluations: usize,
    pub final_mean: Vec<f64>,
    pub final_std: Vec<f64>,
}

/// Maximize `objective` (higher is better). Deterministic given the seed;
/// population members evaluate in parallel but reduce in sample order.
/// `early_stop` inspects the best-so-far vector after each iteration and may
/// end the search (its own evaluation cost is the caller's business).
pub fn cem_optimize(
    objective: &(impl Fn(&[f64]) -> f64 + Sync),
    cfg: &CemConfig,
    seed: u64,
    mut early_stop: impl FnMut(&[f64], f64) -> bool,
) -> CemOutcome {
    let dim = cfg.init_mean.len();
    assert!(cfg.population >= 8, "population too small to rank");
    let mut mean = cfg.init_mean.clone();
    let mut std = cfg.init_std.clone();
    let mut best = mean.clone();
    let mut best_objective = f64::NEG_INFINITY;
    let mut history = Vec::new();
    let mut evaluations = 0usize;

    for iter in 0..cfg.iterations {
        if let Some(cap) = cfg.max_evaluations {
            if evaluations + cfg.population > cap {
                break;
            }
        }
        // Draw the whole population serially (one stream), evaluate in
        // parallel, reduce in index order.
        let mut rng = DetRng::keyed(&[seed, 0xCE11, iter as u64]);
        let samples: Vec<Vec<f64>> = (0..cfg.population)
            .map(|_| {
                (0..dim).map(|d| mean[d] + std[d] * rng.gaussian()).collect()
            })
            .collect();
        let scores: Vec<f64> = samples.par_iter().map(|s| objective(s)).collect();
        evaluations += cfg.population;

        let mut order: Vec<usize> = (0..cfg.population).collect();
        order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).expect("finite objective"));
        let elites = &order[..cfg.elite_count()];

        if scores[order[0]] > best_objective {
            best_objective = scores[order[0]];
            best = samples[order[0]].clone();
        }
        history.push(best_objective);

        for d in 0..dim {
            let m = elites.iter().map(|&i| samples[i][d]).sum::<f64>() / elites.len() as f64;
            let var = elites
                .iter()
                .map(|&i| (samples[i][d] - m) * (samples[i][d] - m))
                .sum::<f64>()
                / elites.len() as f64;
            mean[d] = m;
            std[d] = var.sqrt().max(cfg.std_floor);
        }

        if early_stop(&best, best_objective) {
            break;
        }
    }

    CemOutcome { best, best_objective, history, evaluations, final_mean: mean, final_std: std }
}
