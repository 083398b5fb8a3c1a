use ndarray::Array1;
use rand::Rng;

use super::adasyn::majority_fractions;
use super::smote::{append_rows, Interpolator};
use super::{ClassSplit, Resampled, SamplingWarning};
use crate::data::TabularDataset;
use crate::error::Result;
use crate::seed::SeedStream;

/// Minority rows whose neighbourhood is mostly, but not entirely, majority.
pub(crate) fn danger_rows(train: &TabularDataset, split: &ClassSplit, k: usize) -> Vec<usize> {
    majority_fractions(train, split, k)
        .iter()
        .zip(&split.minority)
        .filter(|(&frac, _)| {
            let m = (frac * k as f64).round() as usize;
            2 * m > k && m < k
        })
        .map(|(_, &i)| i)
        .collect()
}

/// SMOTE seeded only from "danger" minority rows on the class boundary. With
/// no danger rows the input comes back unchanged and flagged.
pub fn borderline_smote(train: &TabularDataset, k: usize, rng: &SeedStream) -> Result<Resampled> {
    let split = ClassSplit::of(train)?;
    split.require_more_than(k)?;
    let need = split.deficit();
    if need == 0 {
        return Ok(train.clone().into());
    }
    let danger = danger_rows(train, &split, k);
    if danger.is_empty() {
        return Ok(Resampled {
            data: train.clone(),
            warnings: vec![SamplingWarning::NoDangerPoints],
        });
    }
    let mut r = rng.rng();
    let mut interp = Interpolator::new(train.features(), &split.minority, k);
    let rows: Vec<Array1<f64>> = (0..need)
        .map(|_| {
            let base = danger[r.random_range(0..danger.len())];
            interp.sample(base, &mut r)
        })
        .collect();
    Ok(append_rows(train, &rows, split.minority_label)?.into())
}
