//! Deep generative augmentation: adversarial, variational and
//! class-conditional adversarial models that double a training set.

mod gan;
mod vae;

use std::io::Write;

use ndarray::{Array1, Array2, Axis};
use rand::seq::SliceRandom;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

pub use gan::{discriminator_loss, generator_loss, train_cgan, train_gan};
pub use vae::{kl_standard_normal, train_vae, vae_loss, VaeLoss};

use crate::data::{TabularDataset, SYNTHETIC_GROUP};
use crate::error::{Error, Result};
use crate::net::NetCore;
use crate::seed::SeedStream;
use crate::util::largest_remainder;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GenerationKind {
    Gan,
    Vae,
    Cgan,
}

impl GenerationKind {
    pub const ALL: [GenerationKind; 3] = [GenerationKind::Gan, GenerationKind::Vae, GenerationKind::Cgan];

    pub fn name(self) -> &'static str {
        match self {
            GenerationKind::Gan => "GAN",
            GenerationKind::Vae => "VAE",
            GenerationKind::Cgan => "CGAN",
        }
    }
}

/// How the `batch_size` field is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BatchMode {
    /// Rows per minibatch.
    Size,
    /// Minibatches per epoch.
    Count,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GenerationConfig {
    pub latent_dim: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub batch_mode: BatchMode,
    pub learning_rate: f64,
    pub hidden: Vec<usize>,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        GenerationConfig {
            latent_dim: 100,
            epochs: 100,
            batch_size: 64,
            batch_mode: BatchMode::Size,
            learning_rate: 2e-4,
            hidden: vec![128, 128],
        }
    }
}

impl GenerationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.latent_dim == 0 || self.batch_size == 0 || self.hidden.contains(&0) {
            return Err(Error::InvalidParameter(
                "latent_dim, batch_size and hidden widths must be positive".into(),
            ));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidParameter("learning_rate must be positive".into()));
        }
        Ok(())
    }

    /// Rows per minibatch for a training set of `n` rows (never more than `n`).
    pub fn rows_per_batch(&self, n: usize) -> usize {
        let b = match self.batch_mode {
            BatchMode::Size => self.batch_size,
            BatchMode::Count => n.div_ceil(self.batch_size),
        };
        b.clamp(1, n.max(1))
    }
}

/// Column-wise standardization fitted on training rows, with the training
/// range kept for clipping generated values.
#[derive(Debug, Clone, PartialEq)]
pub struct Scaler {
    pub mean: Array1<f64>,
    pub scale: Array1<f64>,
    pub min: Array1<f64>,
    pub max: Array1<f64>,
}

impl Scaler {
    pub fn fit(x: &Array2<f64>) -> Self {
        let mean = x.mean_axis(Axis(0)).expect("non-empty");
        let scale = x.std_axis(Axis(0), 0.0).mapv(|s| if s > 0.0 { s } else { 1.0 });
        let min = x.fold_axis(Axis(0), f64::INFINITY, |a, &b| a.min(b));
        let max = x.fold_axis(Axis(0), f64::NEG_INFINITY, |a, &b| a.max(b));
        Scaler { mean, scale, min, max }
    }

    pub fn transform(&self, x: &Array2<f64>) -> Array2<f64> {
        (x - &self.mean) / &self.scale
    }

    pub fn inverse(&self, z: &Array2<f64>) -> Array2<f64> {
        z * &self.scale + &self.mean
    }

    pub fn clip(&self, x: &mut Array2<f64>) {
        for mut row in x.rows_mut() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = v.clamp(self.min[j], self.max[j]);
            }
        }
    }
}

/// Per-epoch training losses. GAN/CGAN record (generator, discriminator);
/// VAE records (reconstruction, KL).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LossHistory {
    pub header: [&'static str; 2],
    pub epochs: Vec<(f64, f64)>,
}

impl LossHistory {
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let err = |e: csv::Error| Error::Csv(e.to_string());
        w.write_record(["epoch", self.header[0], self.header[1]]).map_err(err)?;
        for (i, (a, b)) in self.epochs.iter().enumerate() {
            w.write_record([(i + 1).to_string(), format!("{a:?}"), format!("{b:?}")])
                .map_err(err)?;
        }
        w.flush().map_err(|e| Error::Csv(e.to_string()))
    }
}

/// A trained generator ready to emit synthetic rows.
#[derive(Debug, Clone)]
pub struct TrainedGenerator {
    pub kind: GenerationKind,
    /// Maps latent vectors (plus a class column for CGAN) to standardized rows.
    pub generator: NetCore,
    pub latent_dim: usize,
    /// Scaler over the modelled columns; for GAN/VAE the last column is the label.
    pub scaler: Scaler,
    pub n_features: usize,
    pub history: LossHistory,
}

impl TrainedGenerator {
    fn latent(&self, n: usize, rng: &mut impl rand::Rng) -> Array2<f64> {
        Array2::from_shape_fn((n, self.latent_dim), |_| StandardNormal.sample(rng))
    }

    /// Generated rows in data units, before clipping. For GAN/VAE the label
    /// score is the last column.
    pub fn sample_raw(&self, n: usize, class: Option<u8>, rng: &SeedStream) -> Array2<f64> {
        let mut r = rng.rng();
        let z = self.latent(n, &mut r);
        let input = match (self.kind, class) {
            (GenerationKind::Cgan, Some(c)) => gan::with_condition(&z, &Array2::from_elem((n, 1), f64::from(c))),
            (GenerationKind::Cgan, None) => {
                let cond = Array2::from_shape_fn((n, 1), |(i, _)| (i % 2) as f64);
                gan::with_condition(&z, &cond)
            }
            _ => z,
        };
        self.scaler.inverse(&self.generator.forward(&input))
    }

    /// `n` clipped feature rows. `class` conditions a CGAN; the other kinds
    /// ignore it and drop their label-score column.
    pub fn sample_features(&self, n: usize, class: Option<u8>, rng: &SeedStream) -> Array2<f64> {
        let mut raw = self.sample_raw(n, class, rng);
        self.scaler.clip(&mut raw);
        raw.slice_move(ndarray::s![.., ..self.n_features])
    }
}

pub fn train_generator(
    kind: GenerationKind,
    train: &TabularDataset,
    cfg: &GenerationConfig,
    rng: &SeedStream,
) -> Result<TrainedGenerator> {
    match kind {
        GenerationKind::Gan => train_gan(train, cfg, rng),
        GenerationKind::Vae => train_vae(train, cfg, rng),
        GenerationKind::Cgan => train_cgan(train, cfg, rng),
    }
}

/// Features with the label appended as a final column.
pub(crate) fn joint_matrix(train: &TabularDataset) -> Array2<f64> {
    let labels = train.label_vector().insert_axis(Axis(1));
    ndarray::concatenate(Axis(1), &[train.features().view(), labels.view()]).expect("same rows")
}

pub(crate) fn check_trainable(train: &TabularDataset, cfg: &GenerationConfig) -> Result<()> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    if train.features().iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidDataset("non-finite features".into()));
    }
    Ok(())
}

/// Row order for one epoch.
pub(crate) fn epoch_order(n: usize, rng: &mut impl rand::Rng) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    order
}

/// Appends exactly `n` synthetic rows to the `n` real rows, preserving the
/// class ratio (largest remainder). GAN/VAE rows are labelled by ranking their
/// generated label score; CGAN rows are generated per requested class.
pub fn augment_by_generation(
    train: &TabularDataset,
    model: &TrainedGenerator,
    rng: &SeedStream,
) -> Result<TabularDataset> {
    let n = train.n_rows();
    if n == 0 {
        return Err(Error::EmptyTrainingSet);
    }
    if model.n_features != train.n_features() {
        return Err(Error::DimensionMismatch {
            expected: model.n_features,
            actual: train.n_features(),
        });
    }
    let [c0, c1] = train.class_counts();
    let quota = largest_remainder(&[c0 as f64, c1 as f64], n);
    let (features, labels) = match model.kind {
        GenerationKind::Cgan => {
            let zeros = model.sample_features(quota[0], Some(0), &rng.derive(0));
            let ones = model.sample_features(quota[1], Some(1), &rng.derive(1));
            let x = ndarray::concatenate(Axis(0), &[zeros.view(), ones.view()]).expect("same width");
            let mut labels = vec![0u8; quota[0]];
            labels.extend(std::iter::repeat_n(1u8, quota[1]));
            (x, labels)
        }
        GenerationKind::Gan | GenerationKind::Vae => {
            let raw = model.sample_raw(n, None, rng);
            let score = raw.column(model.n_features).to_owned();
            let mut clipped = raw;
            model.scaler.clip(&mut clipped);
            let x = clipped.slice_move(ndarray::s![.., ..model.n_features]);
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| score[b].total_cmp(&score[a]).then(a.cmp(&b)));
            let mut labels = vec![0u8; n];
            for &i in order.iter().take(quota[1]) {
                labels[i] = 1;
            }
            (x, labels)
        }
    };
    if features.iter().any(|v| !v.is_finite()) {
        return Err(Error::Diverged {
            epoch: model.history.epochs.len(),
            detail: "generator emitted non-finite values".into(),
        });
    }
    train.append_synthetic(&features, &labels, SYNTHETIC_GROUP)
}
