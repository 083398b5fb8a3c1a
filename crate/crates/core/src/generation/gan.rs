use ndarray::{s, Array2, Axis};
use rand_distr::{Distribution, StandardNormal};

use super::{check_trainable, epoch_order, joint_matrix, GenerationConfig, GenerationKind, LossHistory, Scaler, TrainedGenerator};
use crate::data::TabularDataset;
use crate::error::{Error, Result};
use crate::net::{bce_with_logits, Activation, Adam, Gradients, NetCore};
use crate::seed::SeedStream;

pub(crate) fn with_condition(x: &Array2<f64>, cond: &Array2<f64>) -> Array2<f64> {
    ndarray::concatenate(Axis(1), &[x.view(), cond.view()]).expect("same rows")
}

/// Discriminator loss `BCE(D(real), 1) + BCE(D(fake), 0)` and its gradients.
/// The discriminator emits logits; its probability is the logistic of them.
pub fn discriminator_loss(d: &NetCore, real: &Array2<f64>, fake: &Array2<f64>) -> (f64, Gradients) {
    let cr = d.forward_cached(real);
    let (lr, gr) = bce_with_logits(cr.output(), &Array2::ones((real.nrows(), 1)));
    let (mut grads, _) = d.backward(&cr, &gr);
    let cf = d.forward_cached(fake);
    let (lf, gf) = bce_with_logits(cf.output(), &Array2::zeros((fake.nrows(), 1)));
    let (gfake, _) = d.backward(&cf, &gf);
    grads.add_assign(&gfake);
    (lr + lf, grads)
}

/// Non-saturating generator loss `BCE(D(G(input)), 1)`, backpropagated through
/// the (frozen) discriminator into the generator. `cond` is appended to the
/// generator output before it reaches the discriminator.
pub fn generator_loss(
    g: &NetCore,
    d: &NetCore,
    input: &Array2<f64>,
    cond: Option<&Array2<f64>>,
) -> (f64, Gradients) {
    let cg = g.forward_cached(input);
    let fake = match cond {
        Some(c) => with_condition(cg.output(), c),
        None => cg.output().clone(),
    };
    let cd = d.forward_cached(&fake);
    let (loss, gl) = bce_with_logits(cd.output(), &Array2::ones((fake.nrows(), 1)));
    let (_, dx) = d.backward(&cd, &gl);
    let width = g.output_dim();
    let dout = dx.slice(s![.., ..width]).to_owned();
    let (grads, _) = g.backward(&cg, &dout);
    (loss, grads)
}

fn build_pair(latent_in: usize, data_out: usize, d_in: usize, cfg: &GenerationConfig, rng: &SeedStream) -> (NetCore, NetCore) {
    let mut g_sizes = vec![latent_in];
    g_sizes.extend(&cfg.hidden);
    g_sizes.push(data_out);
    let mut g_act = vec![Activation::Relu; cfg.hidden.len()];
    g_act.push(Activation::Linear);
    let mut d_sizes = vec![d_in];
    d_sizes.extend(&cfg.hidden);
    d_sizes.push(1);
    let g = NetCore::new(&g_sizes, &g_act, Adam::new(cfg.learning_rate, 0.5, 0.999), &rng.derive(1));
    let d = NetCore::new(&d_sizes, &g_act, Adam::new(cfg.learning_rate, 0.5, 0.999), &rng.derive(2));
    (g, d)
}

fn gaussian(rows: usize, cols: usize, r: &mut impl rand::Rng) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| StandardNormal.sample(r))
}

/// Alternating minibatch training. `cond`, when present, holds one class
/// value per row and conditions both networks.
fn train_adversarial(
    data: &Array2<f64>,
    cond: Option<&Array2<f64>>,
    cfg: &GenerationConfig,
    rng: &SeedStream,
) -> Result<(NetCore, LossHistory)> {
    let n = data.nrows();
    let cond_w = cond.map_or(0, |c| c.ncols());
    let (mut g, mut d) = build_pair(cfg.latent_dim + cond_w, data.ncols(), data.ncols() + cond_w, cfg, rng);
    let batch = cfg.rows_per_batch(n);
    let mut r = rng.derive(3).rng();
    let mut history = LossHistory {
        header: ["loss_g", "loss_d"],
        epochs: Vec::with_capacity(cfg.epochs),
    };
    for epoch in 0..cfg.epochs {
        let order = epoch_order(n, &mut r);
        let (mut sum_g, mut sum_d, mut batches) = (0.0, 0.0, 0usize);
        for idx in order.chunks(batch) {
            let real = data.select(Axis(0), idx);
            let c = cond.map(|c| c.select(Axis(0), idx));
            let attach = |x: &Array2<f64>| match &c {
                Some(c) => with_condition(x, c),
                None => x.clone(),
            };
            let fake = g.forward(&attach(&gaussian(idx.len(), cfg.latent_dim, &mut r)));
            let (ld, gd) = discriminator_loss(&d, &attach(&real), &attach(&fake));
            d.step(&gd);
            let z = attach(&gaussian(idx.len(), cfg.latent_dim, &mut r));
            let (lg, gg) = generator_loss(&g, &d, &z, c.as_ref());
            g.step(&gg);
            if !(ld.is_finite() && lg.is_finite()) {
                return Err(Error::Diverged {
                    epoch,
                    detail: format!("loss_d={ld}, loss_g={lg}"),
                });
            }
            sum_g += lg;
            sum_d += ld;
            batches += 1;
        }
        if !(g.is_finite() && d.is_finite()) {
            return Err(Error::Diverged {
                epoch,
                detail: "non-finite parameters".into(),
            });
        }
        history.epochs.push((sum_g / batches as f64, sum_d / batches as f64));
    }
    Ok((g, history))
}

/// Adversarial generator over standardized features plus the label column.
pub fn train_gan(train: &TabularDataset, cfg: &GenerationConfig, rng: &SeedStream) -> Result<TrainedGenerator> {
    check_trainable(train, cfg)?;
    let joint = joint_matrix(train);
    let scaler = Scaler::fit(&joint);
    let (generator, history) = train_adversarial(&scaler.transform(&joint), None, cfg, rng)?;
    Ok(TrainedGenerator {
        kind: GenerationKind::Gan,
        generator,
        latent_dim: cfg.latent_dim,
        scaler,
        n_features: train.n_features(),
        history,
    })
}

/// Class-conditional adversarial generator: the class value is appended to
/// both the latent input and the discriminator input.
pub fn train_cgan(train: &TabularDataset, cfg: &GenerationConfig, rng: &SeedStream) -> Result<TrainedGenerator> {
    check_trainable(train, cfg)?;
    train.require_both_classes("conditional generation needs both classes")?;
    let scaler = Scaler::fit(train.features());
    let cond = train.label_vector().insert_axis(Axis(1));
    let (generator, history) = train_adversarial(&scaler.transform(train.features()), Some(&cond), cfg, rng)?;
    Ok(TrainedGenerator {
        kind: GenerationKind::Cgan,
        generator,
        latent_dim: cfg.latent_dim,
        scaler,
        n_features: train.n_features(),
        history,
    })
}
