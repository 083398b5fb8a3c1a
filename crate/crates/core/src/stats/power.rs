use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::{two_sided_p, Placements};
use crate::error::{Error, Result};
use crate::seed::SeedStream;

/// Simulation model behind [`power_analysis`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PowerConfig {
    /// Share of positive rows.
    pub positive_fraction: f64,
    /// Within-class correlation between the two models' scores.
    pub correlation: f64,
    pub alpha: f64,
}

impl Default for PowerConfig {
    fn default() -> Self {
        PowerConfig {
            positive_fraction: 1097.0 / 1709.0,
            correlation: CORRELATION,
            alpha: 0.05,
        }
    }
}

const CORRELATION: f64 = 0.39;

/// Monte-Carlo power of the paired DeLong test to detect `auc(B) - auc(A) =
/// delta` with `n` rows, where `auc(A) = base_auc`. Each replicate draws
/// equal-variance binormal score pairs and rejects when the two-sided p-value
/// falls below alpha.
pub fn power_analysis(
    delta_auc: f64,
    n: usize,
    base_auc: f64,
    reps: usize,
    cfg: &PowerConfig,
    rng: &SeedStream,
) -> Result<f64> {
    let target = base_auc + delta_auc;
    if !(0.5..1.0).contains(&base_auc) || !(0.5..1.0).contains(&target) {
        return Err(Error::InfeasibleTarget(format!(
            "AUCs {base_auc} and {target} must lie in [0.5, 1)"
        )));
    }
    if n < 20 || reps == 0 {
        return Err(Error::InvalidParameter("need n >= 20 and reps >= 1".into()));
    }
    if !(-1.0..1.0).contains(&cfg.correlation) || !(0.0..1.0).contains(&cfg.alpha) {
        return Err(Error::InvalidParameter("correlation in (-1,1), alpha in (0,1)".into()));
    }
    let n1 = ((n as f64) * cfg.positive_fraction).round() as usize;
    let n0 = n - n1;
    if n1 < 2 || n0 < 2 {
        return Err(Error::InvalidParameter("too few rows per class".into()));
    }
    let normal = Normal::standard();
    let shift = |a: f64| std::f64::consts::SQRT_2 * normal.inverse_cdf(a);
    let (da, db) = (shift(base_auc), shift(target));
    let rho = cfg.correlation;
    let ortho = (1.0 - rho * rho).sqrt();
    let mut labels = vec![1u8; n1];
    labels.extend(std::iter::repeat_n(0u8, n0));

    let rejections: usize = (0..reps as u64)
        .into_par_iter()
        .map(|i| {
            let mut r = rng.derive(i).rng();
            let mut a = Vec::with_capacity(n);
            let mut b = Vec::with_capacity(n);
            for &l in &labels {
                let u: f64 = StandardNormal.sample(&mut r);
                let v: f64 = StandardNormal.sample(&mut r);
                let on = f64::from(l);
                a.push(u + on * da);
                b.push(rho * u + ortho * v + on * db);
            }
            let pa = Placements::compute(&a, &labels).expect("both classes");
            let pb = Placements::compute(&b, &labels).expect("both classes");
            let var = pb.difference_variance(&pa);
            let diff = pb.auc() - pa.auc();
            let z = if var > 0.0 { diff / var.sqrt() } else { 0.0 };
            usize::from(two_sided_p(z) < cfg.alpha)
        })
        .sum();
    Ok(rejections as f64 / reps as f64)
}
