use toolforge_neuro::*;
use toolforge_core::rng::DetRng;
use toolforge_core::scalar::Scalar;

fn random_tensor(shape: &[usize], rng: &mut DetRng, lo: f64, hi: f64) -> Tensor<f64> {
    Tensor::from_vec(shape, (0..shape.iter().product::<usize>()).map(|_| rng.range(lo, hi)).collect())
}

fn main() {
    let spec = ModelSpec::new(
        vec![6],
        vec![
            LayerSpec::Dense { input: 6, output: 8 },
            LayerSpec::ReLU,
            LayerSpec::Dense { input: 8, output: 4 },
            LayerSpec::Sigmoid,
        ],
    );
    let mut rng = DetRng::keyed(&[606, 4]);
    let weights = ModelWeights::<f32>::init(&spec, 0);
    let x64 = random_tensor(&[6], &mut rng, -0.5, 0.5);
    let x: Tensor<f32> = x64.cast();
    let t: Tensor<f32> = random_tensor(&[4], &mut rng, 0.1, 0.9).cast();
    let eps = 5e-3;

    let cache = forward(&spec, &weights, &x).unwrap();
    let (_, lgrad) = loss(LossKind::Mse, cache.output(), &t);
    let (analytic, _) = backward(&spec, &weights, &cache, &lgrad).unwrap();
    let mut w = weights.clone();
    let mut worst = (0.0f64, 0usize, 0usize, 0.0f64, 0.0f64);
    for k in 0..w.tensors.len() {
        for i in 0..w.tensors[k].1.data.len() {
            let orig = w.tensors[k].1.data[i];
            w.tensors[k].1.data[i] = orig + f32::c(eps);
            let lp = loss(LossKind::Mse, forward(&spec, &w, &x).unwrap().output(), &t).0;
            w.tensors[k].1.data[i] = orig - f32::c(eps);
            let lm = loss(LossKind::Mse, forward(&spec, &w, &x).unwrap().output(), &t).0;
            w.tensors[k].1.data[i] = orig;
            let numeric = (lp - lm) / (2.0 * eps);
            let a = analytic.tensors[k].1.data[i].f64();
            let err = (a - numeric).abs() / (a.abs() + numeric.abs()).max(1e-8);
            if err > worst.0 { worst = (err, k, i, a, numeric); }
        }
    }
    println!("worst err={:.4e} tensor={} ({}) idx={} analytic={:.6e} numeric={:.6e}",
        worst.0, worst.1, w.tensors[worst.1].0, worst.2, worst.3, worst.4);
    // hidden pre-activations
    println!("hidden pre-acts: {:?}", cache.activations[1].data);
}
