use ndarray::{Array1, Array2};
use rand::Rng;

use super::smote::{append_rows, Interpolator};
use super::ClassSplit;
use crate::data::TabularDataset;
use crate::error::{Error, Result};
use crate::seed::SeedStream;
use crate::util::{largest_remainder, squared_distance};

#[derive(Debug, Clone, PartialEq)]
pub struct KMeans {
    pub centroids: Array2<f64>,
    pub assignment: Vec<usize>,
}

const MAX_ITER: usize = 300;

/// Lloyd's algorithm with k-means++ seeding. Empty clusters keep their
/// previous centroid.
pub fn kmeans(x: &Array2<f64>, clusters: usize, rng: &SeedStream) -> KMeans {
    let n = x.nrows();
    let c = clusters.min(n).max(1);
    let mut r = rng.rng();
    let mut centroids = Array2::zeros((c, x.ncols()));
    let first = r.random_range(0..n);
    centroids.row_mut(0).assign(&x.row(first));
    let mut nearest: Vec<f64> = (0..n).map(|i| squared_distance(x.row(i), x.row(first))).collect();
    for j in 1..c {
        let total: f64 = nearest.iter().sum();
        let pick = if total > 0.0 {
            let mut target = r.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &d) in nearest.iter().enumerate() {
                if target < d {
                    chosen = i;
                    break;
                }
                target -= d;
            }
            chosen
        } else {
            r.random_range(0..n)
        };
        centroids.row_mut(j).assign(&x.row(pick));
        for (i, d) in nearest.iter_mut().enumerate() {
            *d = d.min(squared_distance(x.row(i), x.row(pick)));
        }
    }
    let mut assignment = vec![usize::MAX; n];
    for _ in 0..MAX_ITER {
        let mut changed = false;
        for (i, slot) in assignment.iter_mut().enumerate() {
            let best = (0..c)
                .min_by(|&a, &b| {
                    squared_distance(x.row(i), centroids.row(a))
                        .total_cmp(&squared_distance(x.row(i), centroids.row(b)))
                        .then(a.cmp(&b))
                })
                .unwrap_or(0);
            if *slot != best {
                *slot = best;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        let mut sums = Array2::<f64>::zeros((c, x.ncols()));
        let mut counts = vec![0usize; c];
        for (i, &a) in assignment.iter().enumerate() {
            let mut row = sums.row_mut(a);
            row += &x.row(i);
            counts[a] += 1;
        }
        for j in 0..c {
            if counts[j] > 0 {
                let mean = &sums.row(j) / counts[j] as f64;
                centroids.row_mut(j).assign(&mean);
            }
        }
    }
    KMeans {
        centroids,
        assignment,
    }
}

fn mean_pairwise_distance(x: &Array2<f64>, rows: &[usize]) -> f64 {
    let mut sum = 0.0;
    let mut pairs = 0usize;
    for (a, &i) in rows.iter().enumerate() {
        for &j in &rows[a + 1..] {
            sum += squared_distance(x.row(i), x.row(j)).sqrt();
            pairs += 1;
        }
    }
    if pairs == 0 {
        0.0
    } else {
        sum / pairs as f64
    }
}

/// Clusters the training features, then oversamples only inside clusters
/// where the minority class holds more than half of the rows. Sparser
/// clusters receive larger quotas.
pub fn kmeans_smote(train: &TabularDataset, k: usize, clusters: usize, rng: &SeedStream) -> Result<TabularDataset> {
    if clusters == 0 {
        return Err(Error::InvalidParameter("clusters must be >= 1".into()));
    }
    let split = ClassSplit::of(train)?;
    let need = split.deficit();
    if need == 0 {
        return Ok(train.clone());
    }
    split.require_more_than(k)?;
    let x = train.features();
    let km = kmeans(x, clusters, &rng.derive(0));
    let n_clusters = km.centroids.nrows();
    let mut eligible: Vec<Vec<usize>> = Vec::new();
    for c in 0..n_clusters {
        let members: Vec<usize> = (0..train.n_rows()).filter(|&i| km.assignment[i] == c).collect();
        let minority: Vec<usize> = members
            .iter()
            .copied()
            .filter(|&i| train.labels()[i] == split.minority_label)
            .collect();
        if !members.is_empty() && 2 * minority.len() > members.len() {
            eligible.push(minority);
        }
    }
    if eligible.is_empty() {
        return Err(Error::NoMinorityCluster);
    }
    let d = x.ncols() as f64;
    let log_sparsity: Vec<f64> = eligible
        .iter()
        .map(|rows| d * mean_pairwise_distance(x, rows).ln() - (rows.len() as f64).ln())
        .collect();
    let top = log_sparsity.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = if top.is_finite() {
        log_sparsity.iter().map(|l| (l - top).exp()).collect()
    } else {
        vec![1.0; eligible.len()]
    };
    let quotas = largest_remainder(&weights, need);
    let mut r = rng.derive(1).rng();
    let mut rows: Vec<Array1<f64>> = Vec::with_capacity(need);
    for (pool, &q) in eligible.iter().zip(&quotas) {
        let kk = k.min(pool.len() - 1);
        let mut interp = Interpolator::new(x, pool, kk);
        for _ in 0..q {
            let base = pool[r.random_range(0..pool.len())];
            rows.push(interp.sample(base, &mut r));
        }
    }
    append_rows(train, &rows, split.minority_label)
}
