//! Two-Gaussian benchmark data with a known Bayes-optimal AUC.
//!
//! Both classes are unit-covariance Gaussians; class 1 is shifted by a vector of
//! norm `delta` spread evenly over the informative features. The optimal
//! scorer is the projection on the shift, whose AUC is `Phi(delta / sqrt(2))`.

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::dataset::TabularDataset;
use crate::error::{Error, Result};
use crate::seed::SeedStream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SyntheticConfig {
    pub rows: usize,
    pub features: usize,
    pub informative: usize,
    pub positive_fraction: f64,
    pub bayes_auc: f64,
    pub groups: usize,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            rows: 1709,
            features: 18,
            informative: 6,
            positive_fraction: 1097.0 / 1709.0,
            bayes_auc: 0.69,
            groups: 4,
            seed: 20_240_501,
        }
    }
}

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("standard normal")
}

/// Mean-shift norm giving the requested optimal AUC.
pub fn separation_for_auc(auc: f64) -> Result<f64> {
    if !(0.5..1.0).contains(&auc) {
        return Err(Error::InfeasibleTarget(format!("AUC {auc} outside [0.5, 1)")));
    }
    Ok(std::f64::consts::SQRT_2 * std_normal().inverse_cdf(auc))
}

/// Analytic AUC of the optimal linear scorer for a given shift norm.
pub fn bayes_optimal_auc(separation: f64) -> f64 {
    std_normal().cdf(separation / std::f64::consts::SQRT_2)
}

impl SyntheticConfig {
    pub fn class_counts(&self) -> [usize; 2] {
        let pos = (self.rows as f64 * self.positive_fraction).round() as usize;
        [self.rows - pos, pos]
    }

    pub fn analytic_auc(&self) -> Result<f64> {
        Ok(bayes_optimal_auc(separation_for_auc(self.bayes_auc)?))
    }

    pub fn generate(&self) -> Result<TabularDataset> {
        if self.features == 0 || self.informative == 0 || self.informative > self.features {
            return Err(Error::InvalidParameter(format!(
                "need 0 < informative ({}) <= features ({})",
                self.informative, self.features
            )));
        }
        if self.groups < 1 || self.rows < 2 * self.groups {
            return Err(Error::InvalidParameter(format!(
                "{} rows cannot fill {} groups",
                self.rows, self.groups
            )));
        }
        let [neg, pos] = self.class_counts();
        if neg == 0 || pos == 0 {
            return Err(Error::InvalidParameter("positive_fraction leaves a class empty".into()));
        }
        let shift = separation_for_auc(self.bayes_auc)? / (self.informative as f64).sqrt();
        let stream = SeedStream::new(self.seed);
        let mut rng = stream.derive(1).rng();
        let mut labels: Vec<u8> = std::iter::repeat_n(0u8, neg)
            .chain(std::iter::repeat_n(1u8, pos))
            .collect();
        labels.shuffle(&mut rng);
        let mut x = Array2::zeros((self.rows, self.features));
        for (i, &label) in labels.iter().enumerate() {
            for j in 0..self.features {
                let z: f64 = StandardNormal.sample(&mut rng);
                let mu = if label == 1 && j < self.informative { shift } else { 0.0 };
                x[[i, j]] = z + mu;
            }
        }
        let mut slots: Vec<usize> = (0..self.rows).map(|i| i % self.groups).collect();
        slots.shuffle(&mut stream.derive(2).rng());
        let groups = slots.iter().map(|g| format!("school{}", g + 1)).collect();
        let names = (0..self.features).map(|j| format!("f{}", j + 1)).collect();
        TabularDataset::new(x, labels, groups, names)
    }
}
