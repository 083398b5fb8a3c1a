//! Small dense feed-forward network with manual backpropagation and an Adam
//! optimizer. Shared by the generative models and the MLP classifier.

use ndarray::{Array1, Array2, Axis};
use rand::Rng;

use crate::seed::SeedStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Linear,
    Sigmoid,
}

impl Activation {
    fn apply(self, z: &Array2<f64>) -> Array2<f64> {
        match self {
            Activation::Relu => z.mapv(|v| v.max(0.0)),
            Activation::Linear => z.clone(),
            Activation::Sigmoid => z.mapv(sigmoid),
        }
    }

    /// d(activation)/dz, given the pre-activation `z` and output `a`.
    fn derivative(self, z: &Array2<f64>, a: &Array2<f64>) -> Array2<f64> {
        match self {
            Activation::Relu => z.mapv(|v| if v > 0.0 { 1.0 } else { 0.0 }),
            Activation::Linear => Array2::ones(z.raw_dim()),
            Activation::Sigmoid => a.mapv(|s| s * (1.0 - s)),
        }
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
    pub activation: Activation,
}

/// Per-parameter gradients (or moments), shaped like the network.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Array2<f64>>,
    pub bias: Vec<Array1<f64>>,
}

impl Gradients {
    pub fn zeros_like(net: &NetCore) -> Self {
        Gradients {
            weights: net.layers.iter().map(|l| Array2::zeros(l.weights.raw_dim())).collect(),
            bias: net.layers.iter().map(|l| Array1::zeros(l.bias.raw_dim())).collect(),
        }
    }

    pub fn flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (w, b) in self.weights.iter().zip(&self.bias) {
            out.extend(w.iter());
            out.extend(b.iter());
        }
        out
    }

    pub fn add_assign(&mut self, other: &Gradients) {
        for (a, b) in self.weights.iter_mut().zip(&other.weights) {
            *a += b;
        }
        for (a, b) in self.bias.iter_mut().zip(&other.bias) {
            *a += b;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().all(|w| w.iter().all(|v| v.is_finite()))
            && self.bias.iter().all(|b| b.iter().all(|v| v.is_finite()))
    }
}

/// Adaptive moment estimation state.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub step: u64,
    first: Option<Gradients>,
    second: Option<Gradients>,
}

impl Adam {
    pub fn new(learning_rate: f64, beta1: f64, beta2: f64) -> Self {
        Adam {
            learning_rate,
            beta1,
            beta2,
            epsilon: 1e-8,
            step: 0,
            first: None,
            second: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetCore {
    pub layers: Vec<Dense>,
    pub optimizer: Adam,
}

/// Intermediate values from a forward pass, consumed by `backward`.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    inputs: Vec<Array2<f64>>,
    pre: Vec<Array2<f64>>,
    post: Vec<Array2<f64>>,
}

impl ForwardCache {
    pub fn output(&self) -> &Array2<f64> {
        self.post.last().expect("network has layers")
    }
}

impl NetCore {
    /// Glorot-uniform weights, zero biases. `sizes` lists input, hidden and
    /// output widths; `activations` has one entry per layer.
    pub fn new(sizes: &[usize], activations: &[Activation], optimizer: Adam, rng: &SeedStream) -> Self {
        assert_eq!(sizes.len(), activations.len() + 1, "one activation per layer");
        let mut r = rng.rng();
        let layers = sizes
            .windows(2)
            .zip(activations)
            .map(|(w, &activation)| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let factor = if activation == Activation::Sigmoid { 2.0 } else { 6.0 };
                let bound = (factor / (fan_in + fan_out) as f64).sqrt();
                Dense {
                    weights: Array2::from_shape_fn((fan_in, fan_out), |_| r.random_range(-bound..bound)),
                    bias: Array1::zeros(fan_out),
                    activation,
                }
            })
            .collect();
        NetCore { layers, optimizer }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].weights.nrows()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().expect("layers").weights.ncols()
    }

    pub fn forward(&self, x: &Array2<f64>) -> Array2<f64> {
        self.layers.iter().fold(x.clone(), |a, l| {
            let z = a.dot(&l.weights) + &l.bias;
            l.activation.apply(&z)
        })
    }

    pub fn forward_cached(&self, x: &Array2<f64>) -> ForwardCache {
        let mut cache = ForwardCache {
            inputs: Vec::with_capacity(self.layers.len()),
            pre: Vec::with_capacity(self.layers.len()),
            post: Vec::with_capacity(self.layers.len()),
        };
        let mut a = x.clone();
        for l in &self.layers {
            let z = a.dot(&l.weights) + &l.bias;
            let out = l.activation.apply(&z);
            cache.inputs.push(a);
            cache.pre.push(z);
            a = out.clone();
            cache.post.push(out);
        }
        cache
    }

    /// Backpropagates `grad_output` (dLoss/dOutput) and returns parameter
    /// gradients plus dLoss/dInput.
    pub fn backward(&self, cache: &ForwardCache, grad_output: &Array2<f64>) -> (Gradients, Array2<f64>) {
        let mut gw = Vec::with_capacity(self.layers.len());
        let mut gb = Vec::with_capacity(self.layers.len());
        let mut delta = grad_output.clone();
        for (i, l) in self.layers.iter().enumerate().rev() {
            let dz = delta * l.activation.derivative(&cache.pre[i], &cache.post[i]);
            gw.push(cache.inputs[i].t().dot(&dz));
            gb.push(dz.sum_axis(Axis(0)));
            delta = dz.dot(&l.weights.t());
        }
        gw.reverse();
        gb.reverse();
        (Gradients { weights: gw, bias: gb }, delta)
    }

    /// One Adam update.
    pub fn step(&mut self, grads: &Gradients) {
        let zeros = Gradients::zeros_like(self);
        let opt = &mut self.optimizer;
        opt.step += 1;
        let m = opt.first.get_or_insert_with(|| zeros.clone());
        let v = opt.second.get_or_insert(zeros);
        let (b1, b2) = (opt.beta1, opt.beta2);
        let t = opt.step as i32;
        let lr_t = opt.learning_rate * (1.0 - b2.powi(t)).sqrt() / (1.0 - b1.powi(t));
        let eps = opt.epsilon;
        for (i, layer) in self.layers.iter_mut().enumerate() {
            ndarray::Zip::from(&mut layer.weights)
                .and(&mut m.weights[i])
                .and(&mut v.weights[i])
                .and(&grads.weights[i])
                .for_each(|p, m, v, &g| {
                    *m = b1 * *m + (1.0 - b1) * g;
                    *v = b2 * *v + (1.0 - b2) * g * g;
                    *p -= lr_t * *m / (v.sqrt() + eps);
                });
            ndarray::Zip::from(&mut layer.bias)
                .and(&mut m.bias[i])
                .and(&mut v.bias[i])
                .and(&grads.bias[i])
                .for_each(|p, m, v, &g| {
                    *m = b1 * *m + (1.0 - b1) * g;
                    *v = b2 * *v + (1.0 - b2) * g * g;
                    *p -= lr_t * *m / (v.sqrt() + eps);
                });
        }
    }

    pub fn params_flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for l in &self.layers {
            out.extend(l.weights.iter());
            out.extend(l.bias.iter());
        }
        out
    }

    pub fn set_params_flat(&mut self, values: &[f64]) {
        let mut it = values.iter();
        for l in &mut self.layers {
            for w in l.weights.iter_mut() {
                *w = *it.next().expect("parameter count");
            }
            for b in l.bias.iter_mut() {
                *b = *it.next().expect("parameter count");
            }
        }
    }

    pub fn n_params(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.params_flat().iter().all(|v| v.is_finite())
    }
}

/// Mean binary cross-entropy on logits, with the gradient w.r.t. the logits.
pub fn bce_with_logits(logits: &Array2<f64>, targets: &Array2<f64>) -> (f64, Array2<f64>) {
    let n = logits.len() as f64;
    let mut loss = 0.0;
    let mut grad = Array2::zeros(logits.raw_dim());
    ndarray::Zip::from(&mut grad)
        .and(logits)
        .and(targets)
        .for_each(|g, &z, &t| {
            // log(1 + e^z) - t z, evaluated stably
            loss += z.max(0.0) - z * t + (-z.abs()).exp().ln_1p();
            *g = (sigmoid(z) - t) / n;
        });
    (loss / n, grad)
}

/// Mean over rows of the summed squared error, with its gradient.
pub fn squared_error(pred: &Array2<f64>, target: &Array2<f64>) -> (f64, Array2<f64>) {
    let rows = pred.nrows() as f64;
    let diff = pred - target;
    let loss = diff.iter().map(|d| d * d).sum::<f64>() / rows;
    (loss, diff * (2.0 / rows))
}

/// Largest relative error between `analytic` and central finite differences
/// of `loss` over every parameter of `net`. Pairs where both values are below
/// `1e-9` in magnitude are compared absolutely.
pub fn gradient_check<F>(net: &NetCore, analytic: &Gradients, epsilon: f64, mut loss: F) -> f64
where
    F: FnMut(&NetCore) -> f64,
{
    let base = net.params_flat();
    let a = analytic.flat();
    let mut probe = net.clone();
    let mut worst: f64 = 0.0;
    for i in 0..base.len() {
        let mut p = base.clone();
        p[i] = base[i] + epsilon;
        probe.set_params_flat(&p);
        let up = loss(&probe);
        p[i] = base[i] - epsilon;
        probe.set_params_flat(&p);
        let down = loss(&probe);
        let numeric = (up - down) / (2.0 * epsilon);
        let denom = a[i].abs().max(numeric.abs());
        let err = if denom < 1e-9 {
            (a[i] - numeric).abs()
        } else {
            (a[i] - numeric).abs() / denom
        };
        worst = worst.max(err);
    }
    worst
}
