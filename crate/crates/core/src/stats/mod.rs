//! AUC, DeLong variance, bootstrap z-comparison and Benjamini-Hochberg.

mod power;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

pub use power::{power_analysis, PowerConfig};

use crate::error::{Error, Result};
use crate::seed::SeedStream;
use crate::util::{mean, sample_variance};

/// Midranks (1-based) of `values`; tied values share the mean of their ranks.
pub fn midranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        let r = (i + j + 1) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = r;
        }
        i = j;
    }
    ranks
}

fn check_inputs(scores: &[f64], labels: &[u8]) -> Result<(usize, usize)> {
    if scores.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: labels.len(),
            actual: scores.len(),
        });
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::InvalidParameter("NaN score".into()));
    }
    let n1 = labels.iter().filter(|&&l| l == 1).count();
    let n0 = labels.len() - n1;
    if n1 == 0 || n0 == 0 {
        return Err(Error::AucUndefined("labels contain a single class".into()));
    }
    Ok((n1, n0))
}

/// Area under the ROC curve as the normalized Mann-Whitney statistic, with
/// half credit for tied positive/negative pairs.
pub fn auc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    let (n1, n0) = check_inputs(scores, labels)?;
    let ranks = midranks(scores);
    let r1: f64 = ranks.iter().zip(labels).filter(|(_, &l)| l == 1).map(|(r, _)| r).sum();
    let u = r1 - (n1 * (n1 + 1)) as f64 / 2.0;
    Ok(u / (n1 as f64 * n0 as f64))
}

/// DeLong placement values: for each positive, the fraction of negatives it
/// outranks (ties count half); for each negative, the fraction of positives
/// that outrank it.
#[derive(Debug, Clone, PartialEq)]
pub struct Placements {
    pub positive: Vec<f64>,
    pub negative: Vec<f64>,
}

impl Placements {
    pub fn compute(scores: &[f64], labels: &[u8]) -> Result<Self> {
        let (n1, n0) = check_inputs(scores, labels)?;
        let all = midranks(scores);
        let split = |label: u8| -> (Vec<f64>, Vec<f64>) {
            let idx: Vec<usize> = (0..scores.len()).filter(|&i| labels[i] == label).collect();
            let own = midranks(&idx.iter().map(|&i| scores[i]).collect::<Vec<_>>());
            (idx.iter().map(|&i| all[i]).collect(), own)
        };
        let (all_pos, own_pos) = split(1);
        let (all_neg, own_neg) = split(0);
        // overall midrank minus within-class midrank = (#other-class below) + ½(#other-class tied)
        let positive = all_pos.iter().zip(&own_pos).map(|(a, o)| (a - o) / n0 as f64).collect();
        let negative = all_neg
            .iter()
            .zip(&own_neg)
            .map(|(a, o)| (n1 as f64 - (a - o)) / n1 as f64)
            .collect();
        Ok(Placements { positive, negative })
    }

    pub fn auc(&self) -> f64 {
        mean(&self.positive)
    }

    /// `S10/n1 + S01/n0` with sample variances of the placements.
    pub fn variance(&self) -> f64 {
        sample_variance(&self.positive) / self.positive.len() as f64
            + sample_variance(&self.negative) / self.negative.len() as f64
    }

    /// Variance of `auc(self) - auc(other)` for two score sets on the same rows.
    pub fn difference_variance(&self, other: &Placements) -> f64 {
        let diff = |a: &[f64], b: &[f64]| -> Vec<f64> { a.iter().zip(b).map(|(x, y)| x - y).collect() };
        sample_variance(&diff(&self.positive, &other.positive)) / self.positive.len() as f64
            + sample_variance(&diff(&self.negative, &other.negative)) / self.negative.len() as f64
    }
}

/// DeLong structural-component variance of the AUC estimate.
pub fn delong_variance(scores: &[f64], labels: &[u8]) -> Result<f64> {
    Ok(Placements::compute(scores, labels)?.variance())
}

/// `b` bootstrap means of `samples` (resampled with replacement). Replicate
/// `i` draws from `rng.derive(i)`, so the result does not depend on thread
/// scheduling.
pub fn bootstrap_auc_distribution(samples: &[f64], b: usize, rng: &SeedStream) -> Result<Vec<f64>> {
    if samples.is_empty() {
        return Err(Error::InvalidParameter("bootstrap needs at least one sample".into()));
    }
    if b == 0 {
        return Err(Error::InvalidParameter("bootstrap replicate count must be positive".into()));
    }
    let n = samples.len();
    Ok((0..b as u64)
        .into_par_iter()
        .map(|i| {
            let mut r = rng.derive(i).rng();
            (0..n).map(|_| samples[r.random_range(0..n)]).sum::<f64>() / n as f64
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonResult {
    pub z: f64,
    pub p_value: f64,
    /// Set by the multiple-comparison step; false until then.
    pub significant: bool,
    /// Both distributions have zero variance.
    pub degenerate: bool,
    pub baseline_mean: f64,
    pub candidate_mean: f64,
}

pub fn two_sided_p(z: f64) -> f64 {
    if z.is_infinite() {
        return 0.0;
    }
    erfc(z.abs() / std::f64::consts::SQRT_2).min(1.0)
}

/// z-test between two bootstrap distributions.
pub fn compare_distributions(base: &[f64], cand: &[f64]) -> Result<ComparisonResult> {
    if base.is_empty() || cand.is_empty() {
        return Err(Error::InvalidParameter("empty bootstrap distribution".into()));
    }
    let (mb, mc) = (mean(base), mean(cand));
    let var = sample_variance(base) + sample_variance(cand);
    let degenerate = var == 0.0;
    let z = if degenerate {
        match mc.partial_cmp(&mb) {
            Some(std::cmp::Ordering::Greater) => f64::INFINITY,
            Some(std::cmp::Ordering::Less) => f64::NEG_INFINITY,
            _ => 0.0,
        }
    } else {
        (mc - mb) / var.sqrt()
    };
    Ok(ComparisonResult {
        z,
        p_value: two_sided_p(z),
        significant: false,
        degenerate,
        baseline_mean: mb,
        candidate_mean: mc,
    })
}

/// Benjamini-Hochberg step-up: rejections in the input order.
pub fn benjamini_hochberg(p_values: &[f64], q: f64) -> Vec<bool> {
    let m = p_values.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p_values[a].total_cmp(&p_values[b]));
    let cutoff = (0..m)
        .rev()
        .find(|&i| p_values[order[i]] <= (i + 1) as f64 * q / m as f64)
        .map(|i| p_values[order[i]]);
    match cutoff {
        Some(c) => p_values.iter().map(|&p| p <= c).collect(),
        None => vec![false; m],
    }
}
