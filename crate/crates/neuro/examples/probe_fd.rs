use toolforge_neuro::*;
use toolforge_core::rng::DetRng;

fn random_tensor(shape: &[usize], rng: &mut DetRng, lo: f64, hi: f64) -> Tensor<f64> {
    Tensor::from_vec(shape, (0..shape.iter().product::<usize>()).map(|_| rng.range(lo, hi)).collect())
}

fn main() {
    // conv WITHOUT relu: pure linear+sigmoid path
    let conv_norelu = ModelSpec::new(
        vec![1, 8, 8],
        vec![
            LayerSpec::Conv3x3 { cin: 1, cout: 2, stride: 1 },
            LayerSpec::Conv3x3 { cin: 2, cout: 2, stride: 2 },
            LayerSpec::Flatten,
            LayerSpec::Dense { input: 2 * 4 * 4, output: 3 },
            LayerSpec::Sigmoid,
        ],
    );
    let conv_relu = ModelSpec::new(
        vec![1, 8, 8],
        vec![
            LayerSpec::Conv3x3 { cin: 1, cout: 2, stride: 1 },
            LayerSpec::ReLU,
            LayerSpec::Conv3x3 { cin: 2, cout: 2, stride: 2 },
            LayerSpec::ReLU,
            LayerSpec::Flatten,
            LayerSpec::Dense { input: 2 * 4 * 4, output: 3 },
            LayerSpec::Sigmoid,
        ],
    );
    let mut rng = DetRng::keyed(&[606, 3]);
    for seed in [0u64,1,2,3,4] {
        let w1 = ModelWeights::<f64>::init(&conv_norelu, seed);
        let x = random_tensor(&[1,8,8], &mut rng, -0.5, 0.5);
        let t = random_tensor(&[3], &mut rng, 0.1, 0.9);
        let e1 = grad_check(&conv_norelu, &w1, &x, &t, LossKind::Mse, 1e-4);
        let w2 = ModelWeights::<f64>::init(&conv_relu, seed);
        let e2 = grad_check(&conv_relu, &w2, &x, &t, LossKind::Mse, 1e-4);
        // count pre-activations near zero going into ReLU
        let cache = forward(&conv_relu, &w2, &x).unwrap();
        let near: usize = cache.activations[1].data.iter().chain(cache.activations[3].data.iter())
            .filter(|v| v.abs() < 2e-4).count();
        println!("seed {seed}: norelu_err={e1:.3e} relu_err={e2:.3e} kink_adjacent={near}");
    }
}
