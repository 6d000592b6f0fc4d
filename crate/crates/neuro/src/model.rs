//! Layer menu, shape inference, initialization, and manual forward/backward.
//!
//! The menu is deliberately small (dense, 3x3 conv with zero padding, ReLU,
//! sigmoid, flatten, 2x2 mean pool); each layer's backward is hand-written
//! and verified against finite differences. Reductions accumulate in f64
//! regardless of the storage scalar.

use crate::tensor::Tensor;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use toolforge_core::rng::DetRng;
use toolforge_core::scalar::Scalar;

#[derive(Debug, Error)]
pub enum NeuroError {
    #[error("shape mismatch at layer {layer}: expected {expected:?}, got {got:?}")]
    ShapeMismatch { layer: usize, expected: Vec<usize>, got: Vec<usize> },
    #[error("loss diverged: non-finite value encountered ({0})")]
    DivergedLoss(String),
}

/// Image shapes are [channels, height, width]; dense shapes are [n].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LayerSpec {
    Dense { input: usize, output: usize },
    Conv3x3 { cin: usize, cout: usize, stride: usize },
    ReLU,
    Sigmoid,
    Flatten,
    MeanPool2,
}

impl LayerSpec {
    /// Output shape for a given input shape, or None if incompatible.
    pub fn output_shape(&self, input: &[usize]) -> Option<Vec<usize>> {
        match *self {
            LayerSpec::Dense { input: n_in, output } => {
                if input == [n_in] {
                    Some(vec![output])
                } else {
                    None
                }
            }
            LayerSpec::Conv3x3 { cin, cout, stride } => match input {
                [c, h, w] if *c == cin && stride >= 1 => {
                    Some(vec![cout, (h - 1) / stride + 1, (w - 1) / stride + 1])
                }
                _ => None,
            },
            LayerSpec::ReLU | LayerSpec::Sigmoid => Some(input.to_vec()),
            LayerSpec::Flatten => Some(vec![input.iter().product()]),
            LayerSpec::MeanPool2 => match input {
                [c, h, w] if h % 2 == 0 && w % 2 == 0 => Some(vec![*c, h / 2, w / 2]),
                _ => None,
            },
        }
    }

    /// (weight shape, bias shape) for parameterized layers.
    pub fn param_shapes(&self) -> Option<(Vec<usize>, Vec<usize>)> {
        match *self {
            LayerSpec::Dense { input, output } => Some((vec![output, input], vec![output])),
            LayerSpec::Conv3x3 { cin, cout, .. } => Some((vec![cout, cin, 3, 3], vec![cout])),
            _ => None,
        }
    }

    fn fans(&self) -> Option<(usize, usize)> {
        match *self {
            LayerSpec::Dense { input, output } => Some((input, output)),
            LayerSpec::Conv3x3 { cin, cout, .. } => Some((cin * 9, cout * 9)),
            _ => None,
        }
    }
}

/// An architecture: input shape plus the layer stack.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub input_shape: Vec<usize>,
    pub layers: Vec<LayerSpec>,
}

impl ModelSpec {
    pub fn new(input_shape: Vec<usize>, layers: Vec<LayerSpec>) -> Self {
        let spec = Self { input_shape, layers };
        spec.output_shape().expect("layer stack must be shape-consistent");
        spec
    }

    pub fn output_shape(&self) -> Option<Vec<usize>> {
        let mut shape = self.input_shape.clone();
        for layer in &self.layers {
            shape = layer.output_shape(&shape)?;
        }
        Some(shape)
    }

    pub fn parameter_count(&self) -> usize {
        self.layers
            .iter()
            .filter_map(|l| l.param_shapes())
            .map(|(w, b)| w.iter().product::<usize>() + b.iter().product::<usize>())
            .sum()
    }
}

/// Named parameter tensors, ordered to match the layer stack:
/// `l{i}.w` / `l{i}.b` for each parameterized layer i.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelWeights<S> {
    pub tensors: Vec<(String, Tensor<S>)>,
}

impl<S: Scalar> ModelWeights<S> {
    /// Xavier-uniform initialization with counter-based per-tensor streams:
    /// tensor k draws from the stream keyed by (seed, k).
    pub fn init(spec: &ModelSpec, seed: u64) -> Self {
        let mut tensors = Vec::new();
        for (i, layer) in spec.layers.iter().enumerate() {
            let Some((w_shape, b_shape)) = layer.param_shapes() else { continue };
            let (fan_in, fan_out) = layer.fans().expect("parameterized layers have fans");
            let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let mut rng = DetRng::keyed(&[seed, 0x1217, tensors.len() as u64]);
            let w = Tensor::from_vec(
                &w_shape,
                (0..w_shape.iter().product::<usize>()).map(|_| S::c(rng.range(-a, a))).collect(),
            );
            tensors.push((format!("l{i}.w"), w));
            tensors.push((format!("l{i}.b"), Tensor::zeros(&b_shape)));
        }
        Self { tensors }
    }

    pub fn zeros_like(spec: &ModelSpec) -> Self {
        let mut tensors = Vec::new();
        for (i, layer) in spec.layers.iter().enumerate() {
            let Some((w_shape, b_shape)) = layer.param_shapes() else { continue };
            tensors.push((format!("l{i}.w"), Tensor::zeros(&w_shape)));
            tensors.push((format!("l{i}.b"), Tensor::zeros(&b_shape)));
        }
        Self { tensors }
    }

    pub fn get(&self, name: &str) -> Option<&Tensor<S>> {
        self.tensors.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }

    pub fn cast<T: Scalar>(&self) -> ModelWeights<T> {
        ModelWeights {
            tensors: self.tensors.iter().map(|(n, t)| (n.clone(), t.cast())).collect(),
        }
    }

    pub fn all_finite(&self) -> bool {
        self.tensors.iter().all(|(_, t)| t.all_finite())
    }
}

/// Per-layer activations: `activations[0]` is the input, `activations[i+1]`
/// is layer i's output.
pub struct Cache<S> {
    pub activations: Vec<Tensor<S>>,
}

impl<S: Scalar> Cache<S> {
    pub fn output(&self) -> &Tensor<S> {
        self.activations.last().expect("cache holds at least the input")
    }
}

fn conv_out(n: usize, stride: usize) -> usize {
    (n - 1) / stride + 1
}

/// Deterministic layer-by-layer evaluation.
pub fn forward<S: Scalar>(
    spec: &ModelSpec,
    weights: &ModelWeights<S>,
    input: &Tensor<S>,
) -> Result<Cache<S>, NeuroError> {
    if input.shape != spec.input_shape {
        return Err(NeuroError::ShapeMismatch {
            layer: 0,
            expected: spec.input_shape.clone(),
            got: input.shape.clone(),
        });
    }
    let mut activations = Vec::with_capacity(spec.layers.len() + 1);
    activations.push(input.clone());
    let mut w_idx = 0;
    for (i, layer) in spec.layers.iter().enumerate() {
        let x = activations.last().unwrap();
        let expected = layer.output_shape(&x.shape).ok_or_else(|| NeuroError::ShapeMismatch {
            layer: i,
            expected: spec.input_shape.clone(),
            got: x.shape.clone(),
        })?;
        let y = match *layer {
            LayerSpec::Dense { input: n_in, output } => {
                let w = &weights.tensors[w_idx].1;
                let b = &weights.tensors[w_idx + 1].1;
                w_idx += 2;
                let mut out = Tensor::zeros(&[output]);
                for o in 0..output {
                    let mut acc = b.data[o].f64();
                    let row = &w.data[o * n_in..(o + 1) * n_in];
                    for (wv, xv) in row.iter().zip(&x.data) {
                        acc += wv.f64() * xv.f64();
                    }
                    out.data[o] = S::c(acc);
                }
                out
            }
            LayerSpec::Conv3x3 { cin, cout, stride } => {
                let w = &weights.tensors[w_idx].1;
                let b = &weights.tensors[w_idx + 1].1;
                w_idx += 2;
                let (h, wd) = (x.shape[1], x.shape[2]);
                let (oh, ow) = (conv_out(h, stride), conv_out(wd, stride));
                let mut out = Tensor::zeros(&[cout, oh, ow]);
                for co in 0..cout {
                    for oy in 0..oh {
                        for ox in 0..ow {
                            let mut acc = b.data[co].f64();
                            for ci in 0..cin {
                                for ky in 0..3 {
                                    let iy = (oy * stride + ky) as isize - 1;
                                    if iy < 0 || iy >= h as isize {
                                        continue;
                                    }
                                    for kx in 0..3 {
                                        let ix = (ox * stride + kx) as isize - 1;
                                        if ix < 0 || ix >= wd as isize {
                                            continue;
                                        }
                                        let xv = x.data[(ci * h + iy as usize) * wd + ix as usize];
                                        let wv = w.data[((co * cin + ci) * 3 + ky) * 3 + kx];
                                        acc += wv.f64() * xv.f64();
                                    }
                                }
                            }
                            out.data[(co * oh + oy) * ow + ox] = S::c(acc);
                        }
                    }
                }
                out
            }
            LayerSpec::ReLU => x.map(|v| if v > S::zero() { v } else { S::zero() }),
            LayerSpec::Sigmoid => x.map(|v| S::one() / (S::one() + (-v).exp())),
            LayerSpec::Flatten => x.clone().reshaped(&expected),
            LayerSpec::MeanPool2 => {
                let (c, h, wd) = (x.shape[0], x.shape[1], x.shape[2]);
                let (oh, ow) = (h / 2, wd / 2);
                let mut out = Tensor::zeros(&[c, oh, ow]);
                for ci in 0..c {
                    for oy in 0..oh {
                        for ox in 0..ow {
                            let mut acc = 0.0f64;
                            for dy in 0..2 {
                                for dx in 0..2 {
                                    acc += x.data[(ci * h + oy * 2 + dy) * wd + ox * 2 + dx].f64();
                                }
                            }
                            out.data[(ci * oh + oy) * ow + ox] = S::c(acc * 0.25);
                        }
                    }
                }
                out
            }
        };
        debug_assert_eq!(y.shape, expected);
        activations.push(y);
    }
    Ok(Cache { activations })
}

/// Exact reverse-mode gradients of the stack composed with a downstream
/// gradient `loss_grad` (dL/d output). Returns gradients named like the
/// weights, in the same order.
pub fn backward<S: Scalar>(
    spec: &ModelSpec,
    weights: &ModelWeights<S>,
    cache: &Cache<S>,
    loss_grad: &Tensor<S>,
) -> Result<(ModelWeights<S>, Tensor<S>), NeuroError> {
    let out_shape = cache.output().shape.clone();
    if loss_grad.shape != out_shape {
        return Err(NeuroError::ShapeMismatch { layer: spec.layers.len(), expected: out_shape, got: loss_grad.shape.clone() });
    }
    let mut grads = ModelWeights::<S>::zeros_like(spec);
    let mut g = loss_grad.clone();

    // Parameter tensor index of each parameterized layer, walked backwards.
    let mut w_indices = Vec::new();
    {
        let mut w_idx = 0;
        for layer in &spec.layers {
            if layer.param_shapes().is_some() {
                w_indices.push(Some(w_idx));
                w_idx += 2;
            } else {
                w_indices.push(None);
            }
        }
    }

    for (i, layer) in spec.layers.iter().enumerate().rev() {
        let x = &cache.activations[i];
        let y = &cache.activations[i + 1];
        g = match *layer {
            LayerSpec::Dense { input: n_in, output } => {
                let w_idx = w_indices[i].unwrap();
                let w = &weights.tensors[w_idx].1;
                {
                    let dw = &mut grads.tensors[w_idx].1;
                    for o in 0..output {
                        let go = g.data[o];
                        for xi in 0..n_in {
                            dw.data[o * n_in + xi] = dw.data[o * n_in + xi] + go * x.data[xi];
                        }
                    }
                }
                {
                    let db = &mut grads.tensors[w_idx + 1].1;
                    for o in 0..output {
                        db.data[o] = db.data[o] + g.data[o];
                    }
                }
                let mut dx = Tensor::zeros(&[n_in]);
                for xi in 0..n_in {
                    let mut acc = 0.0f64;
                    for o in 0..output {
                        acc += w.data[o * n_in + xi].f64() * g.data[o].f64();
                    }
                    dx.data[xi] = S::c(acc);
                }
                dx
            }
            LayerSpec::Conv3x3 { cin, cout, stride } => {
                let w_idx = w_indices[i].unwrap();
                let w = &weights.tensors[w_idx].1;
                let (h, wd) = (x.shape[1], x.shape[2]);
                let (oh, ow) = (conv_out(h, stride), conv_out(wd, stride));
                let mut dx = Tensor::zeros(&x.shape);
                {
                    let (left, right) = grads.tensors.split_at_mut(w_idx + 1);
                    let dwt = &mut left[w_idx].1;
                    let dbt = &mut right[0].1;
                    for co in 0..cout {
                        for oy in 0..oh {
                            for ox in 0..ow {
                                let go = g.data[(co * oh + oy) * ow + ox];
                                dbt.data[co] = dbt.data[co] + go;
                                for ci in 0..cin {
                                    for ky in 0..3 {
                                        let iy = (oy * stride + ky) as isize - 1;
                                        if iy < 0 || iy >= h as isize {
                                            continue;
                                        }
                                        for kx in 0..3 {
                                            let ix = (ox * stride + kx) as isize - 1;
                                            if ix < 0 || ix >= wd as isize {
                                                continue;
                                            }
                                            let xi = (ci * h + iy as usize) * wd + ix as usize;
                                            let wi = ((co * cin + ci) * 3 + ky) * 3 + kx;
                                            dwt.data[wi] = dwt.data[wi] + go * x.data[xi];
                                            dx.data[xi] = dx.data[xi] + go * w.data[wi];
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
                dx
            }
            LayerSpec::ReLU => Tensor {
                shape: x.shape.clone(),
                data: x
                    .data
                    .iter()
                    .zip(&g.data)
                    .map(|(&xv, &gv)| if xv > S::zero() { gv } else { S::zero() })
                    .collect(),
            },
            LayerSpec::Sigmoid => Tensor {
                shape: x.shape.clone(),
                data: y
                    .data
                    .iter()
                    .zip(&g.data)
                    .map(|(&yv, &gv)| gv * yv * (S::one() - yv))
                    .collect(),
            },
            LayerSpec::Flatten => g.clone().reshaped(&x.shape),
            LayerSpec::MeanPool2 => {
                let (c, h, wd) = (x.shape[0], x.shape[1], x.shape[2]);
                let (oh, ow) = (h / 2, wd / 2);
                let mut dx = Tensor::zeros(&x.shape);
                let quarter = S::c(0.25);
                for ci in 0..c {
                    for oy in 0..oh {
                        for ox in 0..ow {
                            let gv = g.data[(ci * oh + oy) * ow + ox] * quarter;
                            for dy in 0..2 {
                                for dxp in 0..2 {
                                    dx.data[(ci * h + oy * 2 + dy) * wd + ox * 2 + dxp] = gv;
                                }
                            }
                        }
                    }
                }
                dx
            }
        };
    }
    Ok((grads, g))
}
