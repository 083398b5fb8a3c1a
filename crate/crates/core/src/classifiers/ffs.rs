use super::{train, ModelSpec};
use crate::data::{GroupedFolds, TabularDataset};
use crate::error::{Error, Result};
use crate::seed::SeedStream;
use crate::stats::auc;

/// A candidate feature must raise the mean cross-fold AUC by more than this.
pub const FFS_MIN_IMPROVEMENT: f64 = 1e-4;

fn cross_validated_auc(
    spec: &ModelSpec,
    data: &TabularDataset,
    folds: &GroupedFolds,
    columns: &[usize],
    rng: &SeedStream,
) -> Result<f64> {
    let view = data.select_columns(columns);
    let mut total = 0.0;
    for (k, fold) in folds.iter().enumerate() {
        let model = train(spec, &view.subset(&fold.train), &rng.derive(k as u64))?;
        let test = view.subset(&fold.test);
        total += auc(&model.score(&test)?, test.labels())?;
    }
    Ok(total / folds.len() as f64)
}

/// Greedy forward selection by mean cross-fold AUC. The best single feature
/// is always kept; later features are added while they improve the mean AUC
/// by more than [`FFS_MIN_IMPROVEMENT`]. Returns column indices in the order
/// they were added.
pub fn forward_feature_selection(
    spec: &ModelSpec,
    data: &TabularDataset,
    folds: &GroupedFolds,
    rng: &SeedStream,
) -> Result<Vec<usize>> {
    let d = data.n_features();
    if d == 0 {
        return Err(Error::InvalidDataset("no features to select".into()));
    }
    if folds.is_empty() {
        return Err(Error::GroupedCvImpossible("no folds".into()));
    }
    let mut selected: Vec<usize> = Vec::new();
    let mut best_auc = f64::NEG_INFINITY;
    while selected.len() < d {
        let mut round: Option<(usize, f64)> = None;
        for f in (0..d).filter(|f| !selected.contains(f)) {
            let mut cols = selected.clone();
            cols.push(f);
            let a = cross_validated_auc(spec, data, folds, &cols, rng)?;
            if round.is_none_or(|(_, b)| a > b) {
                round = Some((f, a));
            }
        }
        let (f, a) = round.expect("a remaining feature");
        if !selected.is_empty() && a - best_auc <= FFS_MIN_IMPROVEMENT {
            break;
        }
        selected.push(f);
        best_auc = a;
    }
    Ok(selected)
}
