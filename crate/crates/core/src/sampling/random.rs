use rand::seq::index::sample;
use rand::Rng;

use super::ClassSplit;
use crate::data::TabularDataset;
use crate::error::Result;
use crate::seed::SeedStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResampleMode {
    Over,
    Under,
}

/// `Over` appends uniformly drawn minority duplicates; `Under` keeps a uniform
/// majority subsample of minority size (original row order preserved).
pub fn random_resample(train: &TabularDataset, mode: ResampleMode, rng: &SeedStream) -> Result<TabularDataset> {
    let split = ClassSplit::of(train)?;
    let need = split.deficit();
    if need == 0 {
        return Ok(train.clone());
    }
    let mut r = rng.rng();
    match mode {
        ResampleMode::Over => {
            let copies: Vec<usize> = (0..need)
                .map(|_| split.minority[r.random_range(0..split.minority.len())])
                .collect();
            Ok(train.append_copies(&copies))
        }
        ResampleMode::Under => {
            let mut keep = vec![false; train.n_rows()];
            for &i in &split.minority {
                keep[i] = true;
            }
            for pos in sample(&mut r, split.majority.len(), split.minority.len()) {
                keep[split.majority[pos]] = true;
            }
            let rows: Vec<usize> = (0..train.n_rows()).filter(|&i| keep[i]).collect();
            Ok(train.subset(&rows))
        }
    }
}
