//! Batched episodic REINFORCE with a running-mean baseline and Adam updates.
//!
//! Rollouts fan out across workers with per-episode counter RNG; gradient
//! accumulation reduces in episode-index order, so parallel and serial runs
//! produce identical weights.

use crate::policy::{PolicyNet, RawSample};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use toolforge_neuro::{adam_update, backward, forward, AdamState, ModelWeights, NeuroError, Tensor};

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ReinforceConfig {
    pub batch_size: usize,
    pub batches: usize,
    pub lr: f64,
    pub gamma: f64,
    /// Exponential running-mean weight for the baseline.
    pub baseline_momentum: f64,
}

impl Default for ReinforceConfig {
    fn default() -> Self {
        Self { batch_size: 32, batches: 100, lr: 1e-3, gamma: 0.99, baseline_momentum: 0.9 }
    }
}

/// One policy decision: the trunk input and the raw sample drawn from it.
#[derive(Clone, Debug)]
pub struct StepTrace {
    pub input: Tensor<f32>,
    pub sample: RawSample,
}

#[derive(Clone, Debug, Default)]
pub struct EpisodeTrace {
    pub steps: Vec<StepTrace>,
    pub rewards: Vec<f64>,
}

impl EpisodeTrace {
    pub fn discounted_return(&self, gamma: f64) -> f64 {
        let mut g = 0.0;
        for &r in self.rewards.iter().rev() {
            g = r + gamma * g;
        }
        g
    }
}

/// An environment a policy-gradient loop can sample.
pub trait PgEnv: Sync {
    fn rollout(&self, policy: &PolicyNet, episode_seed: u64) -> EpisodeTrace;
}

/// Reward-to-go from each step under discount `gamma`.
fn returns_to_go(rewards: &[f64], gamma: f64) -> Vec<f64> {
    let mut out = vec![0.0; rewards.len()];
    let mut g = 0.0;
    for t in (0..rewards.len()).rev() {
        g = rewards[t] + gamma * g;
        out[t] = g;
    }
    out
}

/// Train in place; returns the per-batch mean (discounted) returns.
///
/// Credit assignment is reward-to-go with a per-timestep running-mean
/// baseline: step t's advantage is G_t minus the running mean of G_t across
/// episodes, which keeps the estimator unbiased and tames the variance of
/// long episodes.
pub fn reinforce_train(
    env: &impl PgEnv,
    policy: &mut PolicyNet,
    cfg: &ReinforceConfig,
    seed: u64,
) -> Result<Vec<f64>, NeuroError> {
    let mut adam = AdamState::new(&policy.weights);
    let mut curve = Vec::with_capacity(cfg.batches);
    let mut baseline: Vec<f64> = Vec::new();
    let mut baseline_ready = false;

    for batch in 0..cfg.batches {
        let frozen = policy.clone();
        let traces: Vec<EpisodeTrace> = (0..cfg.batch_size)
            .into_par_iter()
            .map(|i| {
                let episode_seed =
                    toolforge_core::rng::DetRng::keyed(&[seed, batch as u64, i as u64]).next_u64();
                env.rollout(&frozen, episode_seed)
            })
            .collect();

        let togo: Vec<Vec<f64>> =
            traces.iter().map(|t| returns_to_go(&t.rewards, cfg.gamma)).collect();
        let returns: Vec<f64> = togo.iter().map(|g| g.first().copied().unwrap_or(0.0)).collect();
        let mean_return = returns.iter().sum::<f64>() / returns.len().max(1) as f64;
        curve.push(mean_return);

        // Per-timestep batch means of G_t, folded into the running baseline.
        let max_len = togo.iter().map(|g| g.len()).max().unwrap_or(0);
        let mut batch_mean = vec![0.0; max_len];
        let mut batch_count = vec![0usize; max_len];
        for g in &togo {
            for (t, &v) in g.iter().enumerate() {
                batch_mean[t] += v;
                batch_count[t] += 1;
            }
        }
        for t in 0..max_len {
            batch_mean[t] /= batch_count[t].max(1) as f64;
        }
        if baseline.len() < max_len {
            baseline.resize(max_len, 0.0);
        }
        if !baseline_ready {
            baseline[..max_len].copy_from_slice(&batch_mean);
            baseline_ready = true;
        } else {
            for t in 0..max_len {
                baseline[t] =
                    cfg.baseline_momentum * baseline[t] + (1.0 - cfg.baseline_momentum) * batch_mean[t];
            }
        }

        // Per-episode gradients in parallel, reduced in episode order.
        let scale = 1.0 / cfg.batch_size as f64;
        let frozen_baseline = baseline.clone();
        let episode_grads: Vec<ModelWeights<f32>> = traces
            .par_iter()
            .zip(&togo)
            .map(|(trace, gtg)| {
                let mut acc = ModelWeights::zeros_like(&frozen.spec);
                for (t, step) in trace.steps.iter().enumerate() {
                    let advantage = (gtg[t] - frozen_baseline[t]) * scale;
                    let cache = forward(&frozen.spec, &frozen.weights, &step.input)
                        .expect("trace inputs came from this spec");
                    let head_grad = frozen.surrogate_grad(cache.output(), &step.sample, advantage);
                    let (grads, _) = backward(&frozen.spec, &frozen.weights, &cache, &head_grad)
                        .expect("shapes align");
                    for (a, (_, g)) in acc.tensors.iter_mut().zip(grads.tensors.iter()) {
                        for (av, gv) in a.1.data.iter_mut().zip(&g.data) {
                            *av += *gv;
                        }
                    }
                }
                acc
            })
            .collect();

        let mut total = ModelWeights::zeros_like(&policy.spec);
        for eg in &episode_grads {
            for (t, (_, g)) in total.tensors.iter_mut().zip(eg.tensors.iter()) {
                for (tv, gv) in t.1.data.iter_mut().zip(&g.data) {
                    *tv += *gv;
                }
            }
        }

        adam_update(&mut policy.weights, &total, &mut adam, cfg.lr);
        if !policy.weights.all_finite() {
            return Err(NeuroError::DivergedLoss(format!("batch {batch}: non-finite weights")));
        }
    }
    Ok(curve)
}
