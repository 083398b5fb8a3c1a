use ndarray::Array1;

use super::smote::{append_rows, Interpolator};
use super::ClassSplit;
use crate::data::TabularDataset;
use crate::error::{Error, Result};
use crate::neighbors::k_nearest;
use crate::seed::SeedStream;
use crate::util::largest_remainder;

/// Fraction of majority rows among each minority row's `k` nearest neighbours
/// over the whole training set.
pub(crate) fn majority_fractions(train: &TabularDataset, split: &ClassSplit, k: usize) -> Vec<f64> {
    let x = train.features();
    let all: Vec<usize> = (0..train.n_rows()).collect();
    split
        .minority
        .iter()
        .map(|&i| {
            let nb = k_nearest(x, x.row(i), &all, Some(i), k);
            let maj = nb
                .iter()
                .filter(|&&j| train.labels()[j] != split.minority_label)
                .count();
            maj as f64 / k as f64
        })
        .collect()
}

/// Adaptive synthetic sampling: each minority row's share of the deficit is
/// proportional to the majority fraction in its neighbourhood.
pub fn adasyn(train: &TabularDataset, k: usize, rng: &SeedStream) -> Result<TabularDataset> {
    let split = ClassSplit::of(train)?;
    let need = split.deficit();
    if need == 0 {
        return Ok(train.clone());
    }
    split.require_more_than(k)?;
    let ratios = majority_fractions(train, &split, k);
    if ratios.iter().all(|&r| r == 0.0) {
        return Err(Error::AdasynUndefined);
    }
    let quotas = largest_remainder(&ratios, need);
    let mut r = rng.rng();
    let mut interp = Interpolator::new(train.features(), &split.minority, k);
    let mut rows: Vec<Array1<f64>> = Vec::with_capacity(need);
    for (&base, &q) in split.minority.iter().zip(&quotas) {
        for _ in 0..q {
            rows.push(interp.sample(base, &mut r));
        }
    }
    append_rows(train, &rows, split.minority_label)
}
