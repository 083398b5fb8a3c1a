use std::collections::HashMap;

use ndarray::{Array1, Array2, ArrayView1};
use rand::Rng;

use super::cleaning::{enn_filter, tomek_filter_removing};
use super::ClassSplit;
use crate::data::{TabularDataset, SYNTHETIC_GROUP};
use crate::error::Result;
use crate::neighbors::k_nearest;
use crate::seed::SeedStream;

/// `x + lambda * (neighbor - x)`.
pub fn interpolate(x: ArrayView1<f64>, neighbor: ArrayView1<f64>, lambda: f64) -> Array1<f64> {
    let mut out = x.to_owned();
    out.zip_mut_with(&neighbor, |a, &b| *a += lambda * (b - *a));
    out
}

/// Draws synthetic points between a base row and one of its `k` nearest
/// neighbours inside `pool`. Neighbour lists are computed lazily.
pub(crate) struct Interpolator<'a> {
    x: &'a Array2<f64>,
    pool: &'a [usize],
    k: usize,
    cache: HashMap<usize, Vec<usize>>,
}

impl<'a> Interpolator<'a> {
    pub fn new(x: &'a Array2<f64>, pool: &'a [usize], k: usize) -> Self {
        Interpolator {
            x,
            pool,
            k,
            cache: HashMap::new(),
        }
    }

    pub fn sample<R: Rng>(&mut self, base: usize, rng: &mut R) -> Array1<f64> {
        let (x, pool, k) = (self.x, self.pool, self.k);
        let nbrs = self
            .cache
            .entry(base)
            .or_insert_with(|| k_nearest(x, x.row(base), pool, Some(base), k));
        if nbrs.is_empty() {
            return x.row(base).to_owned();
        }
        let nb = nbrs[rng.random_range(0..nbrs.len())];
        let lambda: f64 = rng.random();
        interpolate(x.row(base), x.row(nb), lambda)
    }
}

pub(crate) fn append_rows(train: &TabularDataset, rows: &[Array1<f64>], label: u8) -> Result<TabularDataset> {
    let d = train.n_features();
    let mut m = Array2::zeros((rows.len(), d));
    for (i, r) in rows.iter().enumerate() {
        m.row_mut(i).assign(r);
    }
    train.append_synthetic(&m, &vec![label; rows.len()], SYNTHETIC_GROUP)
}

/// Raises the minority class to the majority count by interpolating between
/// uniformly drawn minority rows and their `k` nearest minority neighbours.
pub fn smote(train: &TabularDataset, k: usize, rng: &SeedStream) -> Result<TabularDataset> {
    let split = ClassSplit::of(train)?;
    split.require_more_than(k)?;
    let need = split.deficit();
    if need == 0 {
        return Ok(train.clone());
    }
    let mut r = rng.rng();
    let mut interp = Interpolator::new(train.features(), &split.minority, k);
    let rows: Vec<Array1<f64>> = (0..need)
        .map(|_| {
            let base = split.minority[r.random_range(0..split.minority.len())];
            interp.sample(base, &mut r)
        })
        .collect();
    append_rows(train, &rows, split.minority_label)
}

pub fn smote_enn(train: &TabularDataset, k: usize, enn_k: usize, rng: &SeedStream) -> Result<TabularDataset> {
    enn_filter(&smote(train, k, rng)?, enn_k)
}

/// SMOTE followed by Tomek-link cleaning. After SMOTE the classes are tied, so
/// links are cleaned on the side that was the majority before oversampling.
pub fn smote_tomek(train: &TabularDataset, k: usize, rng: &SeedStream) -> Result<TabularDataset> {
    let majority = 1 - ClassSplit::of(train)?.minority_label;
    Ok(tomek_filter_removing(&smote(train, k, rng)?, Some(majority)))
}
