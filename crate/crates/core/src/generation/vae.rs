use ndarray::{s, Array2, Axis};
use rand_distr::{Distribution, StandardNormal};

use super::{check_trainable, epoch_order, joint_matrix, GenerationConfig, GenerationKind, LossHistory, Scaler, TrainedGenerator};
use crate::data::TabularDataset;
use crate::error::{Error, Result};
use crate::net::{squared_error, Activation, Adam, Gradients, NetCore};
use crate::seed::SeedStream;

/// Mean over rows of `KL(N(mean, exp(logvar)) || N(0, I))`.
pub fn kl_standard_normal(mean: &Array2<f64>, logvar: &Array2<f64>) -> f64 {
    let n = mean.nrows().max(1) as f64;
    let total: f64 = mean
        .iter()
        .zip(logvar.iter())
        .map(|(&m, &lv)| 0.5 * (m * m + lv.exp() - lv - 1.0))
        .sum();
    total / n
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VaeLoss {
    pub reconstruction: f64,
    pub kl: f64,
}

impl VaeLoss {
    pub fn total(&self) -> f64 {
        self.reconstruction + self.kl
    }
}

/// Loss and gradients for one batch with fixed reparameterization noise `eps`.
/// The encoder emits the latent mean followed by the latent log-variance.
pub fn vae_loss(
    encoder: &NetCore,
    decoder: &NetCore,
    x: &Array2<f64>,
    eps: &Array2<f64>,
) -> (VaeLoss, Gradients, Gradients) {
    let latent = decoder.input_dim();
    let n = x.nrows() as f64;
    let ce = encoder.forward_cached(x);
    let out = ce.output();
    let mu = out.slice(s![.., ..latent]).to_owned();
    let lv = out.slice(s![.., latent..]).to_owned();
    let sd = lv.mapv(|v| (0.5 * v).exp());
    let z = &mu + &(&sd * eps);
    let cd = decoder.forward_cached(&z);
    let (reconstruction, grec) = squared_error(cd.output(), x);
    let (gdec, dz) = decoder.backward(&cd, &grec);
    let kl = kl_standard_normal(&mu, &lv);
    let dmu = &dz + &(&mu / n);
    let dlv = &dz * eps * &sd * 0.5 + lv.mapv(|v| 0.5 * (v.exp() - 1.0) / n);
    let dout = ndarray::concatenate(Axis(1), &[dmu.view(), dlv.view()]).expect("same rows");
    let (genc, _) = encoder.backward(&ce, &dout);
    (VaeLoss { reconstruction, kl }, genc, gdec)
}

fn build(d: usize, cfg: &GenerationConfig, rng: &SeedStream) -> (NetCore, NetCore) {
    let mut act = vec![Activation::Relu; cfg.hidden.len()];
    act.push(Activation::Linear);
    let mut enc = vec![d];
    enc.extend(&cfg.hidden);
    enc.push(2 * cfg.latent_dim);
    let mut dec = vec![cfg.latent_dim];
    dec.extend(&cfg.hidden);
    dec.push(d);
    let adam = Adam::new(cfg.learning_rate, 0.9, 0.999);
    (
        NetCore::new(&enc, &act, adam.clone(), &rng.derive(1)),
        NetCore::new(&dec, &act, adam, &rng.derive(2)),
    )
}

/// Variational autoencoder over standardized features plus the label column.
/// The decoder becomes the generator.
pub fn train_vae(train: &TabularDataset, cfg: &GenerationConfig, rng: &SeedStream) -> Result<TrainedGenerator> {
    check_trainable(train, cfg)?;
    let joint = joint_matrix(train);
    let scaler = Scaler::fit(&joint);
    let data = scaler.transform(&joint);
    let n = data.nrows();
    let (mut enc, mut dec) = build(data.ncols(), cfg, rng);
    let batch = cfg.rows_per_batch(n);
    let mut r = rng.derive(3).rng();
    let mut history = LossHistory {
        header: ["recon", "kl"],
        epochs: Vec::with_capacity(cfg.epochs),
    };
    for epoch in 0..cfg.epochs {
        let (mut sum_r, mut sum_k, mut batches) = (0.0, 0.0, 0usize);
        for idx in epoch_order(n, &mut r).chunks(batch) {
            let x = data.select(Axis(0), idx);
            let eps = Array2::from_shape_fn((idx.len(), cfg.latent_dim), |_| StandardNormal.sample(&mut r));
            let (loss, ge, gd) = vae_loss(&enc, &dec, &x, &eps);
            if !loss.total().is_finite() {
                return Err(Error::Diverged {
                    epoch,
                    detail: format!("recon={}, kl={}", loss.reconstruction, loss.kl),
                });
            }
            enc.step(&ge);
            dec.step(&gd);
            sum_r += loss.reconstruction;
            sum_k += loss.kl;
            batches += 1;
        }
        if !(enc.is_finite() && dec.is_finite()) {
            return Err(Error::Diverged {
                epoch,
                detail: "non-finite parameters".into(),
            });
        }
        history.epochs.push((sum_r / batches as f64, sum_k / batches as f64));
    }
    Ok(TrainedGenerator {
        kind: GenerationKind::Vae,
        generator: dec,
        latent_dim: cfg.latent_dim,
        scaler,
        n_features: train.n_features(),
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generation::augment_by_generation;
    use crate::net::gradient_check;
    use ndarray::array;

    fn cfg(epochs: usize) -> GenerationConfig {
        GenerationConfig {
            latent_dim: 2,
            epochs,
            batch_size: 16,
            hidden: vec![16, 16],
            learning_rate: 2e-3,
            ..GenerationConfig::default()
        }
    }

    fn data(n: usize) -> TabularDataset {
        let mut r = SeedStream::new(8).rng();
        let x = Array2::from_shape_fn((n, 3), |(i, j)| {
            let z: f64 = StandardNormal.sample(&mut r);
            i as f64 * 0.01 * (j + 1) as f64 + 0.2 * z
        });
        TabularDataset::new(
            x,
            (0..n).map(|i| u8::from(i % 4 == 0)).collect(),
            vec!["g".into(); n],
            vec!["a".into(), "b".into(), "c".into()],
        )
        .unwrap()
    }

    #[test]
    fn kl_examples() {
        assert_eq!(kl_standard_normal(&array![[0.0, 0.0]], &array![[0.0, 0.0]]), 0.0);
        assert!((kl_standard_normal(&array![[1.0]], &array![[0.0]]) - 0.5).abs() < 1e-12);
        // var = e: 0.5 * (e - 1 - 1)
        let expect = 0.5 * (1f64.exp() - 2.0);
        assert!((kl_standard_normal(&array![[0.0]], &array![[1.0]]) - expect).abs() < 1e-12);
        // averaged over rows, summed over dims
        assert!((kl_standard_normal(&array![[1.0, 1.0], [0.0, 0.0]], &array![[0.0, 0.0], [0.0, 0.0]]) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn untrained_shapes() {
        let ds = data(20);
        let m = train_vae(&ds, &cfg(0), &SeedStream::new(1)).unwrap();
        assert_eq!(m.sample_raw(5, None, &SeedStream::new(2)).dim(), (5, 4));
        assert_eq!(m.sample_features(5, None, &SeedStream::new(2)).dim(), (5, 3));
    }

    #[test]
    fn training_reduces_loss() {
        let ds = data(120);
        let m = train_vae(&ds, &cfg(60), &SeedStream::new(3)).unwrap();
        let first = m.history.epochs[0];
        let last = *m.history.epochs.last().unwrap();
        assert!(last.0 + last.1 < first.0 + first.1, "{first:?} -> {last:?}");
    }

    #[test]
    fn doubles_and_keeps_class_ratio() {
        let ds = data(41);
        let m = train_vae(&ds, &cfg(3), &SeedStream::new(4)).unwrap();
        let out = augment_by_generation(&ds, &m, &SeedStream::new(5)).unwrap();
        assert_eq!(out.n_rows(), 82);
        assert_eq!(out.class_counts(), [60, 22]);
        assert!(out.origin()[41..].iter().all(Option::is_none));
    }

    #[test]
    fn gradients_match_finite_differences() {
        for seed in 0..20u64 {
            let c = GenerationConfig {
                latent_dim: 2,
                hidden: vec![5, 4],
                ..GenerationConfig::default()
            };
            let (mut enc, mut dec) = build(3, &c, &SeedStream::new(seed));
            crate::net::tests::randomize(&mut enc, seed + 100);
            crate::net::tests::randomize(&mut dec, seed + 200);
            // Keep log-variances moderate so exp() stays well conditioned.
            for l in &mut enc.layers {
                l.weights.mapv_inplace(|w| 0.5 * w);
            }
            let mut r = SeedStream::new(seed + 300).rng();
            let x = Array2::from_shape_fn((6, 3), |_| StandardNormal.sample(&mut r));
            let eps = Array2::from_shape_fn((6, 2), |_| StandardNormal.sample(&mut r));
            let (_, ge, gd) = vae_loss(&enc, &dec, &x, &eps);
            let e = gradient_check(&enc, &ge, 1e-5, |en| vae_loss(en, &dec, &x, &eps).0.total());
            assert!(e < 1e-4, "encoder seed {seed}: {e}");
            let e = gradient_check(&dec, &gd, 1e-5, |de| vae_loss(&enc, de, &x, &eps).0.total());
            assert!(e < 1e-4, "decoder seed {seed}: {e}");
        }
    }
}
