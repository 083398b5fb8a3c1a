//! Feature-space transforms fitted on a training split and replayed on test
//! rows. None of them adds or removes rows.

use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{Array1, Array2, Axis};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::TabularDataset;
use crate::error::{Error, Result};
use crate::seed::SeedStream;
use crate::util::quantile_sorted;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PerturbationKind {
    PolynomialFeatures,
    FeatureInteraction,
    Pca,
    Standardization,
    MinMaxScaling,
    RobustScaling,
    LogTransform,
    PowerTransform,
    NoiseAddition,
}

impl PerturbationKind {
    pub const ALL: [PerturbationKind; 9] = [
        PerturbationKind::PolynomialFeatures,
        PerturbationKind::FeatureInteraction,
        PerturbationKind::Pca,
        PerturbationKind::Standardization,
        PerturbationKind::MinMaxScaling,
        PerturbationKind::RobustScaling,
        PerturbationKind::LogTransform,
        PerturbationKind::PowerTransform,
        PerturbationKind::NoiseAddition,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PerturbationKind::PolynomialFeatures => "PolynomialFeatures",
            PerturbationKind::FeatureInteraction => "FeatureInteraction",
            PerturbationKind::Pca => "PCA",
            PerturbationKind::Standardization => "Standardization",
            PerturbationKind::MinMaxScaling => "MinMaxScaling",
            PerturbationKind::RobustScaling => "RobustScaling",
            PerturbationKind::LogTransform => "LogTransform",
            PerturbationKind::PowerTransform => "PowerTransform",
            PerturbationKind::NoiseAddition => "NoiseAddition",
        }
    }

    pub fn is_stochastic(self) -> bool {
        self == PerturbationKind::NoiseAddition
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TransformParams {
    /// Degree-2 expansion; `squares` selects polynomial vs interaction-only.
    Expand { squares: bool },
    Pca { mean: Array1<f64>, rotation: Array2<f64> },
    /// `(x - center) / scale`; passthrough columns carry center 0, scale 1.
    Affine { center: Array1<f64>, scale: Array1<f64> },
    Log { shift: Array1<f64> },
    Power {
        lambdas: Array1<f64>,
        mean: Array1<f64>,
        scale: Array1<f64>,
    },
    Noise { sigma: Array1<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FittedTransform {
    pub kind: PerturbationKind,
    pub input_columns: usize,
    pub params: TransformParams,
    /// Columns left untouched by the scale guard (constant or zero-IQR).
    pub passthrough: Vec<usize>,
}

fn column_sorted(x: &Array2<f64>, j: usize) -> Vec<f64> {
    let mut v = x.column(j).to_vec();
    v.sort_by(f64::total_cmp);
    v
}

fn population_sd(x: &Array2<f64>) -> Array1<f64> {
    x.std_axis(Axis(0), 0.0)
}

fn is_constant(x: &Array2<f64>, j: usize) -> bool {
    let col = x.column(j);
    col.iter().all(|&v| v == col[0])
}

/// Yeo-Johnson power transform of a single value.
pub fn yeo_johnson(x: f64, lambda: f64) -> f64 {
    const EPS: f64 = 1e-12;
    if x >= 0.0 {
        if lambda.abs() < EPS {
            x.ln_1p()
        } else {
            ((x + 1.0).powf(lambda) - 1.0) / lambda
        }
    } else if (lambda - 2.0).abs() < EPS {
        -(-x).ln_1p()
    } else {
        -((1.0 - x).powf(2.0 - lambda) - 1.0) / (2.0 - lambda)
    }
}

/// Profile log-likelihood of the Yeo-Johnson exponent under normality.
pub fn yeo_johnson_log_likelihood(values: &[f64], lambda: f64) -> f64 {
    let n = values.len() as f64;
    let t: Vec<f64> = values.iter().map(|&v| yeo_johnson(v, lambda)).collect();
    let mean = t.iter().sum::<f64>() / n;
    let var = t.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let jac: f64 = values.iter().map(|&v| v.signum() * v.abs().ln_1p()).sum();
    -0.5 * n * var.ln() + (lambda - 1.0) * jac
}

/// Golden-section search for the maximum-likelihood exponent on [-5, 5].
pub fn fit_yeo_johnson_lambda(values: &[f64]) -> f64 {
    const TOL: f64 = 1e-5;
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (-5.0f64, 5.0f64);
    let f = |l: f64| {
        let v = yeo_johnson_log_likelihood(values, l);
        if v.is_finite() {
            v
        } else {
            f64::NEG_INFINITY
        }
    };
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > TOL {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    (a + b) / 2.0
}

fn expand(x: &Array2<f64>, names: &[String], squares: bool) -> (Array2<f64>, Vec<String>) {
    let (n, d) = x.dim();
    let mut extra_names = Vec::new();
    let mut pairs = Vec::new();
    if squares {
        for j in 0..d {
            pairs.push((j, j));
            extra_names.push(format!("{}^2", names[j]));
        }
    }
    for a in 0..d {
        for b in a + 1..d {
            pairs.push((a, b));
            extra_names.push(format!("{}*{}", names[a], names[b]));
        }
    }
    let mut out = Array2::zeros((n, d + pairs.len()));
    for i in 0..n {
        for j in 0..d {
            out[[i, j]] = x[[i, j]];
        }
        for (p, &(a, b)) in pairs.iter().enumerate() {
            out[[i, d + p]] = x[[i, a]] * x[[i, b]];
        }
    }
    let mut all = names.to_vec();
    all.extend(extra_names);
    (out, all)
}

fn fit_pca(x: &Array2<f64>) -> (Array1<f64>, Array2<f64>) {
    let (n, d) = x.dim();
    let mean = x.mean_axis(Axis(0)).unwrap_or_else(|| Array1::zeros(d));
    let centered = x - &mean;
    let denom = (n.max(2) - 1) as f64;
    let cov = centered.t().dot(&centered) / denom;
    let m = DMatrix::from_fn(d, d, |i, j| cov[[i, j]]);
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let mut rotation = Array2::zeros((d, d));
    for (c, &k) in order.iter().enumerate() {
        let v = eig.eigenvectors.column(k);
        // sign convention: largest-magnitude loading positive
        let pivot = (0..d)
            .max_by(|&a, &b| v[a].abs().total_cmp(&v[b].abs()).then(b.cmp(&a)))
            .unwrap_or(0);
        let sign = if v[pivot] < 0.0 { -1.0 } else { 1.0 };
        for r in 0..d {
            rotation[[r, c]] = sign * v[r];
        }
    }
    (mean, rotation)
}

/// Configuration knobs for the perturbation family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbationConfig {
    /// Noise standard deviation as a multiple of each column's SD.
    pub noise_scale: f64,
}

impl Default for PerturbationConfig {
    fn default() -> Self {
        PerturbationConfig { noise_scale: 0.05 }
    }
}

/// Fits `kind` on `train` and returns the transform with the transformed
/// training set. Noise is drawn here and only here.
pub fn fit_transform(
    kind: PerturbationKind,
    train: &TabularDataset,
    rng: &SeedStream,
    cfg: &PerturbationConfig,
) -> Result<(FittedTransform, TabularDataset)> {
    if train.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    let x = train.features();
    let d = x.ncols();
    let mut passthrough = Vec::new();
    let params = match kind {
        PerturbationKind::PolynomialFeatures => TransformParams::Expand { squares: true },
        PerturbationKind::FeatureInteraction => TransformParams::Expand { squares: false },
        PerturbationKind::Pca => {
            let (mean, rotation) = fit_pca(x);
            TransformParams::Pca { mean, rotation }
        }
        PerturbationKind::Standardization => {
            let mean = x.mean_axis(Axis(0)).expect("non-empty");
            let sd = population_sd(x);
            let mut center = Array1::zeros(d);
            let mut scale = Array1::ones(d);
            for j in 0..d {
                if is_constant(x, j) || sd[j] == 0.0 {
                    passthrough.push(j);
                } else {
                    center[j] = mean[j];
                    scale[j] = sd[j];
                }
            }
            TransformParams::Affine { center, scale }
        }
        PerturbationKind::MinMaxScaling => {
            let mut center = Array1::zeros(d);
            let mut scale = Array1::ones(d);
            for j in 0..d {
                let col = x.column(j);
                let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                if hi > lo {
                    center[j] = lo;
                    scale[j] = hi - lo;
                } else {
                    passthrough.push(j);
                }
            }
            TransformParams::Affine { center, scale }
        }
        PerturbationKind::RobustScaling => {
            let mut center = Array1::zeros(d);
            let mut scale = Array1::ones(d);
            for j in 0..d {
                let sorted = column_sorted(x, j);
                let iqr = quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25);
                if iqr > 0.0 {
                    center[j] = quantile_sorted(&sorted, 0.5);
                    scale[j] = iqr;
                } else {
                    passthrough.push(j);
                }
            }
            TransformParams::Affine { center, scale }
        }
        PerturbationKind::LogTransform => {
            let shift = (0..d)
                .map(|j| x.column(j).iter().copied().fold(0.0f64, f64::min))
                .collect();
            TransformParams::Log { shift }
        }
        PerturbationKind::PowerTransform => {
            let mut lambdas = Array1::ones(d);
            let mut mean = Array1::zeros(d);
            let mut scale = Array1::ones(d);
            for j in 0..d {
                if is_constant(x, j) {
                    passthrough.push(j);
                    continue;
                }
                let col = x.column(j).to_vec();
                let lambda = fit_yeo_johnson_lambda(&col);
                let t: Vec<f64> = col.iter().map(|&v| yeo_johnson(v, lambda)).collect();
                let m = t.iter().sum::<f64>() / t.len() as f64;
                let sd = (t.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / t.len() as f64).sqrt();
                lambdas[j] = lambda;
                if sd > 0.0 && sd.is_finite() {
                    mean[j] = m;
                    scale[j] = sd;
                } else {
                    passthrough.push(j);
                }
            }
            TransformParams::Power { lambdas, mean, scale }
        }
        PerturbationKind::NoiseAddition => TransformParams::Noise {
            sigma: population_sd(x) * cfg.noise_scale,
        },
    };
    let fitted = FittedTransform {
        kind,
        input_columns: d,
        params,
        passthrough,
    };
    let mut out = apply_transform(&fitted, train)?;
    if let TransformParams::Noise { sigma } = &fitted.params {
        let mut r = rng.rng();
        let mut noisy = out.features().clone();
        for mut row in noisy.rows_mut() {
            for (v, s) in row.iter_mut().zip(sigma.iter()) {
                let z: f64 = StandardNormal.sample(&mut r);
                *v += s * z;
            }
        }
        out = out.with_features(noisy, train.feature_names().to_vec())?;
    }
    Ok((fitted, out))
}

/// Replays a fitted transform with its training-time parameters. Noise
/// addition is the identity here: evaluation rows are never perturbed.
pub fn apply_transform(t: &FittedTransform, data: &TabularDataset) -> Result<TabularDataset> {
    let x = data.features();
    if x.ncols() != t.input_columns {
        return Err(Error::DimensionMismatch {
            expected: t.input_columns,
            actual: x.ncols(),
        });
    }
    let names = data.feature_names().to_vec();
    let passthrough = |j: usize| t.passthrough.contains(&j);
    let (features, names) = match &t.params {
        TransformParams::Expand { squares } => expand(x, &names, *squares),
        TransformParams::Pca { mean, rotation } => {
            let z = (x - mean).dot(rotation);
            let names = (1..=z.ncols()).map(|i| format!("pc{i}")).collect();
            (z, names)
        }
        TransformParams::Affine { center, scale } => ((x - center) / scale, names),
        TransformParams::Log { shift } => {
            let mut z = x.clone();
            for mut row in z.rows_mut() {
                for (v, s) in row.iter_mut().zip(shift.iter()) {
                    *v = (*v - s).max(0.0).ln_1p();
                }
            }
            (z, names)
        }
        TransformParams::Power { lambdas, mean, scale } => {
            let mut z = x.clone();
            for mut row in z.rows_mut() {
                for (j, v) in row.iter_mut().enumerate() {
                    if !passthrough(j) {
                        *v = (yeo_johnson(*v, lambdas[j]) - mean[j]) / scale[j];
                    }
                }
            }
            (z, names)
        }
        TransformParams::Noise { .. } => (x.clone(), names),
    };
    data.with_features(features, names)
}

impl FittedTransform {
    /// Maps PCA scores back to centered input space.
    pub fn pca_inverse_rotation(&self, scores: &Array2<f64>) -> Option<Array2<f64>> {
        match &self.params {
            TransformParams::Pca { rotation, .. } => Some(scores.dot(&rotation.t())),
            _ => None,
        }
    }
}
