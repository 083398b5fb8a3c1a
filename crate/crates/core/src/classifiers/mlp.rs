use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::net::{bce_with_logits, sigmoid, Activation, Adam, Gradients, NetCore};
use crate::seed::SeedStream;

/// One hidden rectified-linear layer with a logistic output, trained by Adam
/// minibatch descent with an L2 penalty on the weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MlpParams {
    pub hidden: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub alpha: f64,
    /// Stop once the epoch loss has not improved on the best loss by this
    /// relative amount for `patience` consecutive epochs.
    pub plateau_tol: f64,
    pub patience: usize,
}

impl Default for MlpParams {
    fn default() -> Self {
        MlpParams {
            hidden: 100,
            learning_rate: 1e-3,
            batch_size: 200,
            max_epochs: 200,
            alpha: 1e-4,
            plateau_tol: 1e-5,
            patience: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    pub net: NetCore,
    pub epochs: usize,
    pub losses: Vec<f64>,
}

impl MlpModel {
    pub fn score(&self, x: &Array2<f64>) -> Vec<f64> {
        self.net.forward(x).column(0).mapv(sigmoid).to_vec()
    }
}

/// Mean cross-entropy plus `alpha / (2 n) * ||W||^2` over the weight matrices.
pub fn mlp_loss(net: &NetCore, x: &Array2<f64>, y: &Array2<f64>, alpha: f64) -> (f64, Gradients) {
    let n = x.nrows() as f64;
    let cache = net.forward_cached(x);
    let (loss, grad) = bce_with_logits(cache.output(), y);
    let (mut g, _) = net.backward(&cache, &grad);
    let mut penalty = 0.0;
    for (gw, l) in g.weights.iter_mut().zip(&net.layers) {
        penalty += l.weights.iter().map(|w| w * w).sum::<f64>();
        gw.scaled_add(alpha / n, &l.weights);
    }
    (loss + alpha / (2.0 * n) * penalty, g)
}

pub(super) fn fit(p: &MlpParams, x: &Array2<f64>, labels: &[u8], rng: &SeedStream) -> Result<MlpModel> {
    if p.hidden == 0 || p.batch_size == 0 || p.max_epochs == 0 || !(p.learning_rate > 0.0) {
        return Err(Error::InvalidParameter("MLP sizes and learning rate must be positive".into()));
    }
    let n = x.nrows();
    let y = Array2::from_shape_fn((n, 1), |(i, _)| f64::from(labels[i]));
    let mut net = NetCore::new(
        &[x.ncols(), p.hidden, 1],
        &[Activation::Relu, Activation::Linear],
        Adam::new(p.learning_rate, 0.9, 0.999),
        &rng.derive(0),
    );
    let mut r = rng.derive(1).rng();
    let batch = p.batch_size.min(n);
    let mut order: Vec<usize> = (0..n).collect();
    let mut losses = Vec::new();
    let mut best = f64::INFINITY;
    let mut stale = 0;
    for epoch in 0..p.max_epochs {
        order.shuffle(&mut r);
        let mut total = 0.0;
        for idx in order.chunks(batch) {
            let (loss, g) = mlp_loss(&net, &x.select(Axis(0), idx), &y.select(Axis(0), idx), p.alpha);
            if !loss.is_finite() {
                return Err(Error::Diverged {
                    epoch,
                    detail: "MLP loss is not finite".into(),
                });
            }
            net.step(&g);
            total += loss * idx.len() as f64;
        }
        let loss = total / n as f64;
        losses.push(loss);
        if loss < best * (1.0 - p.plateau_tol) {
            stale = 0;
        } else {
            stale += 1;
        }
        best = best.min(loss);
        if stale >= p.patience {
            break;
        }
    }
    Ok(MlpModel {
        net,
        epochs: losses.len(),
        losses,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::tests::gaussian_data;
    use crate::net::gradient_check;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn analytic_gradients_match_finite_differences() {
        for seed in 0..20u64 {
            let mut net = NetCore::new(&[3, 6, 1], &[Activation::Relu, Activation::Linear], Adam::new(1e-3, 0.9, 0.999), &SeedStream::new(seed));
            crate::net::tests::randomize(&mut net, seed + 50);
            let mut r = SeedStream::new(seed + 99).rng();
            let x = Array2::from_shape_fn((7, 3), |_| StandardNormal.sample(&mut r));
            let y = Array2::from_shape_fn((7, 1), |(i, _)| (i % 2) as f64);
            let (_, g) = mlp_loss(&net, &x, &y, 0.3);
            let e = gradient_check(&net, &g, 1e-5, |n| mlp_loss(n, &x, &y, 0.3).0);
            assert!(e < 1e-4, "seed {seed}: {e}");
        }
    }

    #[test]
    fn plateau_stops_early() {
        let ds = gaussian_data(100, 2, 0, 3.0, 1);
        let p = MlpParams { plateau_tol: 0.5, patience: 3, ..MlpParams::default() };
        let m = fit(&p, ds.features(), ds.labels(), &SeedStream::new(2)).unwrap();
        assert!(m.epochs < 200);
        let full = fit(&MlpParams { max_epochs: 40, ..MlpParams::default() }, ds.features(), ds.labels(), &SeedStream::new(2)).unwrap();
        assert!(full.losses.last().unwrap() < &full.losses[0]);
    }
}
