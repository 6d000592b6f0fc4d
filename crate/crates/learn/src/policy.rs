//! Stochastic policy heads over trunk outputs: diagonal Gaussians plus
//! Bernoulli flags, with log-probability gradients for REINFORCE.
//!
//! Trunk outputs are laid out [means.., log_stds.., logits..]. Raw Gaussian
//! samples are unbounded; environments own the mapping from raw samples to
//! physical actions (scaling, clamping, squashing), which keeps the policy
//! gradient exact.

use serde::{Deserialize, Serialize};
use toolforge_core::rng::DetRng;
use toolforge_neuro::{ModelSpec, ModelWeights, Tensor};

/// Log-std clamp range.
pub const LOG_STD_MIN: f64 = -4.0;
pub const LOG_STD_MAX: f64 = 1.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeadLayout {
    pub n_gauss: usize,
    pub n_bern: usize,
}

impl HeadLayout {
    pub fn output_dim(&self) -> usize {
        self.n_gauss * 2 + self.n_bern
    }
}

/// One sampled action in raw head space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RawSample {
    pub gauss: Vec<f64>,
    pub bern: Vec<bool>,
}

/// A trunk network plus its head layout and constant logit offsets
/// (e.g. biasing the stop head toward longer episodes at init).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PolicyNet {
    pub spec: ModelSpec,
    pub weights: ModelWeights<f32>,
    pub heads: HeadLayout,
    pub logit_offsets: Vec<f64>,
}

impl PolicyNet {
    pub fn new(spec: ModelSpec, heads: HeadLayout, seed: u64) -> Self {
        assert_eq!(spec.output_shape().unwrap(), vec![heads.output_dim()]);
        let weights = ModelWeights::init(&spec, seed);
        Self { spec, weights, heads, logit_offsets: vec![0.0; heads.n_bern] }
    }

    pub fn with_logit_offsets(mut self, offsets: Vec<f64>) -> Self {
        assert_eq!(offsets.len(), self.heads.n_bern);
        self.logit_offsets = offsets;
        self
    }

    pub fn forward_trunk(&self, input: &Tensor<f32>) -> Tensor<f32> {
        toolforge_neuro::forward(&self.spec, &self.weights, input)
            .expect("policy input shape fixed")
            .output()
            .clone()
    }

    /// Sample an action from the head distribution at `output`.
    pub fn sample(&self, output: &Tensor<f32>, rng: &mut DetRng) -> RawSample {
        let (means, log_stds, logits) = self.split(output);
        let gauss = means
            .iter()
            .zip(&log_stds)
            .map(|(&m, &ls)| m + ls.exp() * rng.gaussian())
            .collect();
        let bern = logits.iter().map(|&l| rng.uniform() < sigmoid(l)).collect();
        RawSample { gauss, bern }
    }

    /// Mean action: Gaussian means, Bernoulli thresholded at p = 0.5.
    pub fn mode(&self, output: &Tensor<f32>) -> RawSample {
        let (means, _, logits) = self.split(output);
        RawSample { gauss: means, bern: logits.iter().map(|&l| l >= 0.0).collect() }
    }

    /// Log-probability of a raw sample under the head distribution.
    pub fn log_prob(&self, output: &Tensor<f32>, sample: &RawSample) -> f64 {
        let (means, log_stds, logits) = self.split(output);
        let mut lp = 0.0;
        for i in 0..self.heads.n_gauss {
            let std = log_stds[i].exp();
            let z = (sample.gauss[i] - means[i]) / std;
            lp += -0.5 * z * z - log_stds[i] - 0.5 * (2.0 * std::f64::consts::PI).ln();
        }
        for (i, &b) in sample.bern.iter().enumerate() {
            let p = sigmoid(logits[i]);
            lp += if b { p.max(1e-12).ln() } else { (1.0 - p).max(1e-12).ln() };
        }
        lp
    }

    /// Gradient of `-log pi(sample) * advantage` with respect to the trunk
    /// output vector; feed into `backward` as the downstream gradient.
    pub fn surrogate_grad(
        &self,
        output: &Tensor<f32>,
        sample: &RawSample,
        advantage: f64,
    ) -> Tensor<f32> {
        let (means, log_stds, logits) = self.split(output);
        let n = self.heads.n_gauss;
        let mut g = vec![0.0f32; self.heads.output_dim()];
        for i in 0..n {
            let std = log_stds[i].exp();
            let z = (sample.gauss[i] - means[i]) / std;
            // d(-logp)/d mean = -z / std; d(-logp)/d logstd = -(z^2 - 1).
            g[i] = (-advantage * z / std) as f32;
            // Clamped log-std: zero gradient outside the active range.
            let raw_ls = output.data[n + i] as f64;
            if (LOG_STD_MIN..=LOG_STD_MAX).contains(&raw_ls) {
                g[n + i] = (-advantage * (z * z - 1.0)) as f32;
            }
        }
        for (i, &b) in sample.bern.iter().enumerate() {
            let p = sigmoid(logits[i]);
            let indicator = if b { 1.0 } else { 0.0 };
            g[2 * n + i] = (-advantage * (indicator - p)) as f32;
        }
        Tensor::from_vec(&[self.heads.output_dim()], g)
    }

    /// (means, clamped log-stds, offset logits) views of a trunk output.
    pub fn split(&self, output: &Tensor<f32>) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let n = self.heads.n_gauss;
        let means = output.data[..n].iter().map(|&v| v as f64).collect();
        let log_stds = output.data[n..2 * n]
            .iter()
            .map(|&v| (v as f64).clamp(LOG_STD_MIN, LOG_STD_MAX))
            .collect();
        let logits = output.data[2 * n..]
            .iter()
            .zip(&self.logit_offsets)
            .map(|(&v, &off)| v as f64 + off)
            .collect();
        (means, log_stds, logits)
    }
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use toolforge_neuro::LayerSpec;

    fn net() -> PolicyNet {
        let heads = HeadLayout { n_gauss: 2, n_bern: 1 };
        let spec = ModelSpec::new(vec![3], vec![LayerSpec::Dense { input: 3, output: 5 }]);
        PolicyNet::new(spec, heads, 7)
    }

    #[test]
    fn sampling_is_seed_deterministic() {
        let p = net();
        let x = Tensor::from_vec(&[3], vec![0.1, 0.2, -0.3]);
        let out = p.forward_trunk(&x);
        let a = p.sample(&out, &mut DetRng::keyed(&[1, 2]));
        let b = p.sample(&out, &mut DetRng::keyed(&[1, 2]));
        assert_eq!(a, b);
    }

    #[test]
    fn log_prob_matches_analytic_gaussian() {
        let p = net();
        // Dyadic constants survive the f32 round trip exactly.
        let out = Tensor::from_vec(&[5], vec![0.5, -0.25, 0.0, 0.0, 0.25]);
        let sample = RawSample { gauss: vec![0.5, -0.25], bern: vec![true] };
        // At the mean with std = exp(0) = 1: each Gaussian dim contributes
        // -0.5 ln(2 pi); the Bernoulli contributes ln sigmoid(0.25).
        let expected = 2.0 * (-0.5 * (2.0 * std::f64::consts::PI).ln()) + sigmoid(0.25).ln();
        assert!((p.log_prob(&out, &sample) - expected).abs() < 1e-9);
    }

    #[test]
    fn surrogate_gradient_matches_finite_difference() {
        let p = net();
        let out = Tensor::from_vec(&[5], vec![0.4, -0.1, -0.3, 0.2, -0.6]);
        let sample = RawSample { gauss: vec![0.9, -0.4], bern: vec![false] };
        let adv = 1.7;
        let g = p.surrogate_grad(&out, &sample, adv);
        // f32 storage: eps must dwarf the ulp of the perturbed values.
        let eps = 1e-4;
        for i in 0..5 {
            let mut plus = out.clone();
            plus.data[i] += eps as f32;
            let mut minus = out.clone();
            minus.data[i] -= eps as f32;
            let fd = (-adv * p.log_prob(&plus, &sample) + adv * p.log_prob(&minus, &sample))
                / (2.0 * eps);
            assert!(
                (fd - g.data[i] as f64).abs() < 1e-3,
                "dim {i}: fd {fd} vs analytic {}",
                g.data[i]
            );
        }
    }

    #[test]
    fn logit_offsets_shift_bernoulli_probability() {
        let p = net().with_logit_offsets(vec![-3.0]);
        let x = Tensor::from_vec(&[3], vec![0.0, 0.0, 0.0]);
        let out = p.forward_trunk(&x);
        let mut rng = DetRng::keyed(&[9]);
        let mut on = 0;
        for _ in 0..2000 {
            on += p.sample(&out, &mut rng).bern[0] as usize;
        }
        // Zero-init weights put the logit at 0; the offset pulls p to
        // sigmoid(-3) = 0.047.
        let rate = on as f64 / 2000.0;
        assert!(rate < 0.12, "rate {rate}");
    }
}
