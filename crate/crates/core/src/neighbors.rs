//! Brute-force Euclidean nearest neighbours with deterministic tie-breaking
//! (equal distances resolve to the lower row index).

use ndarray::{Array2, ArrayView1};

use crate::util::squared_distance;

/// The `k` rows of `candidates` nearest to `query`, skipping `exclude`.
pub fn k_nearest(
    x: &Array2<f64>,
    query: ArrayView1<f64>,
    candidates: &[usize],
    exclude: Option<usize>,
    k: usize,
) -> Vec<usize> {
    let mut d: Vec<(f64, usize)> = candidates
        .iter()
        .filter(|&&c| Some(c) != exclude)
        .map(|&c| (squared_distance(query, x.row(c)), c))
        .collect();
    let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if k < d.len() {
        d.select_nth_unstable_by(k, cmp);
        d.truncate(k);
    }
    d.sort_by(cmp);
    d.into_iter().map(|(_, i)| i).collect()
}

/// Neighbour lists for every row in `queries`, searched within `candidates`,
/// each query excluding itself.
pub fn knn_table(x: &Array2<f64>, queries: &[usize], candidates: &[usize], k: usize) -> Vec<Vec<usize>> {
    queries
        .iter()
        .map(|&q| k_nearest(x, x.row(q), candidates, Some(q), k))
        .collect()
}
