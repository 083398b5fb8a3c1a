use super::ClassSplit;
use crate::data::TabularDataset;
use crate::error::{Error, Result};
use crate::neighbors::k_nearest;
use crate::util::squared_distance;

/// Majority rows each minority row nominates in version 3's first stage.
const V3_NEIGHBOURS: usize = 3;

fn mean_distance_to(
    data: &TabularDataset,
    row: usize,
    minority: &[usize],
    k: usize,
    farthest: bool,
) -> f64 {
    let x = data.features();
    let mut d: Vec<f64> = minority
        .iter()
        .map(|&m| squared_distance(x.row(row), x.row(m)).sqrt())
        .collect();
    d.sort_by(f64::total_cmp);
    let chosen = if farthest { &d[d.len() - k..] } else { &d[..k] };
    chosen.iter().sum::<f64>() / k as f64
}

/// Undersamples the majority class to minority size, keeping the majority
/// rows ranked best by the version's distance rule:
/// 1. smallest mean distance to the `k` nearest minority rows;
/// 2. smallest mean distance to the `k` farthest minority rows;
/// 3. among majority rows that are among some minority row's nearest
///    majority neighbours, the largest mean distance to the `k` nearest
///    minority rows.
pub fn nearmiss(train: &TabularDataset, version: u8, k: usize) -> Result<TabularDataset> {
    let split = ClassSplit::of(train)?;
    if k == 0 || k > split.minority.len() {
        return Err(Error::InvalidParameter(format!(
            "NearMiss k={k} must be in 1..={}",
            split.minority.len()
        )));
    }
    if split.deficit() == 0 {
        return Ok(train.clone());
    }
    let target = split.minority.len();
    let mut scored: Vec<(f64, usize)> = match version {
        1 | 2 => split
            .majority
            .iter()
            .map(|&i| (mean_distance_to(train, i, &split.minority, k, version == 2), i))
            .collect(),
        3 => {
            let x = train.features();
            let mut candidate = vec![false; train.n_rows()];
            for &m in &split.minority {
                for j in k_nearest(x, x.row(m), &split.majority, None, V3_NEIGHBOURS) {
                    candidate[j] = true;
                }
            }
            split
                .majority
                .iter()
                .copied()
                .filter(|&i| candidate[i])
                .map(|i| (-mean_distance_to(train, i, &split.minority, k, false), i))
                .collect()
        }
        v => {
            return Err(Error::InvalidParameter(format!("NearMiss version {v} not in {{1,2,3}}")))
        }
    };
    scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut keep = vec![false; train.n_rows()];
    for &i in &split.minority {
        keep[i] = true;
    }
    for &(_, i) in scored.iter().take(target) {
        keep[i] = true;
    }
    let rows: Vec<usize> = (0..train.n_rows()).filter(|&i| keep[i]).collect();
    Ok(train.subset(&rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::tests_support::*;

    #[test]
    fn equal_counts_keep_all() {
        let ds = blobs(15, 15, 1.0, 2);
        for v in 1..=3 {
            assert_eq!(nearmiss(&ds, v, 3).unwrap().n_rows(), 30);
        }
    }

    #[test]
    fn version_one_matches_distance_ranking() {
        // Minority at (0,0) and (4,0); six majority rows along the x axis and above.
        let rows = [
            [0.0, 0.0],
            [4.0, 0.0],
            [1.0, 0.0],
            [2.0, 3.0],
            [5.0, 1.0],
            [-3.0, 0.0],
            [2.0, 0.5],
            [9.0, 9.0],
        ];
        let labels = [1, 1, 0, 0, 0, 0, 0, 0];
        let ds = from_rows(&rows, &labels);
        // Enumerate mean distances to both minority points (k = 2 = all).
        let mut means: Vec<(f64, usize)> = (2..8)
            .map(|i| {
                let d0 = ((rows[i][0] - 0.0f64).powi(2) + rows[i][1].powi(2)).sqrt();
                let d1 = ((rows[i][0] - 4.0f64).powi(2) + rows[i][1].powi(2)).sqrt();
                ((d0 + d1) / 2.0, i)
            })
            .collect();
        means.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let mut expect: Vec<Option<usize>> = vec![Some(0), Some(1)];
        expect.extend(means[..2].iter().map(|&(_, i)| Some(i)));
        expect.sort();
        let out = nearmiss(&ds, 1, 2).unwrap();
        assert_eq!(out.origin(), expect.as_slice());
        assert_eq!(out.class_counts(), [2, 2]);
    }

    #[test]
    fn versions_two_and_three_balance() {
        let ds = blobs(40, 12, 1.0, 6);
        for v in [2, 3] {
            let out = nearmiss(&ds, v, 3).unwrap();
            assert_eq!(out.class_counts(), [12, 12], "version {v}");
        }
    }

    #[test]
    fn oversized_k() {
        let ds = blobs(10, 3, 1.0, 6);
        assert!(nearmiss(&ds, 1, 4).is_err());
    }
}
