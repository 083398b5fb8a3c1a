use ndarray::{Array2, ArrayView1, Axis};
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::SeedStream;

/// Random forest of fully grown Gini trees on bootstrap samples.
/// `max_features = None` means `floor(sqrt(d))` candidate features per split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_features: Option<usize>,
    pub bootstrap: bool,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 100,
            max_features: None,
            bootstrap: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Leaf { vote: u8 },
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    pub fn predict(&self, x: ArrayView1<f64>) -> u8 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf { vote } => return vote,
                Node::Split { feature, threshold, left, right } => {
                    at = if x[feature] <= threshold { left } else { right };
                }
            }
        }
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Forest {
    pub trees: Vec<Tree>,
    pub n_features: usize,
}

impl Forest {
    /// Fraction of trees voting class 1.
    pub fn score(&self, x: &Array2<f64>) -> Vec<f64> {
        x.axis_iter(Axis(0))
            .map(|row| {
                let votes: usize = self.trees.iter().map(|t| usize::from(t.predict(row))).sum();
                votes as f64 / self.trees.len() as f64
            })
            .collect()
    }
}

fn gini(pos: usize, total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let p = pos as f64 / total as f64;
    2.0 * p * (1.0 - p)
}

struct Builder<'a, R: Rng> {
    x: &'a Array2<f64>,
    y: &'a [u8],
    mtry: usize,
    rng: R,
    nodes: Vec<Node>,
}

impl<R: Rng> Builder<'_, R> {
    /// Best split of `rows` as (feature, threshold, weighted child impurity).
    fn best_split(&mut self, rows: &[usize]) -> Option<(usize, f64, f64)> {
        let d = self.x.ncols();
        let mut order: Vec<usize> = (0..d).collect();
        order.shuffle(&mut self.rng);
        let total_pos = rows.iter().filter(|&&i| self.y[i] == 1).count();
        let n = rows.len();
        let mut best: Option<(usize, f64, f64)> = None;
        let mut visited = 0;
        let mut sorted = rows.to_vec();
        // Keep drawing features past `mtry` while none of them could split.
        for &f in &order {
            if visited >= self.mtry && best.is_some() {
                break;
            }
            sorted.sort_by(|&a, &b| self.x[[a, f]].total_cmp(&self.x[[b, f]]));
            let first = self.x[[sorted[0], f]];
            if self.x[[sorted[n - 1], f]] == first {
                continue;
            }
            visited += 1;
            let mut left_pos = 0;
            for k in 1..n {
                left_pos += usize::from(self.y[sorted[k - 1]] == 1);
                let (lo, hi) = (self.x[[sorted[k - 1], f]], self.x[[sorted[k], f]]);
                if lo == hi {
                    continue;
                }
                let score = k as f64 * gini(left_pos, k) + (n - k) as f64 * gini(total_pos - left_pos, n - k);
                if best.is_none_or(|(_, _, s)| score < s) {
                    let mut threshold = lo + (hi - lo) / 2.0;
                    if threshold >= hi {
                        threshold = lo;
                    }
                    best = Some((f, threshold, score));
                }
            }
        }
        best
    }

    fn grow(&mut self, rows: Vec<usize>) -> usize {
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf { vote: 0 });
        let pos = rows.iter().filter(|&&i| self.y[i] == 1).count();
        let vote = u8::from(2 * pos > rows.len());
        if pos == 0 || pos == rows.len() || rows.len() < 2 {
            self.nodes[id] = Node::Leaf { vote };
            return id;
        }
        match self.best_split(&rows) {
            None => self.nodes[id] = Node::Leaf { vote },
            Some((feature, threshold, _)) => {
                let (l, r): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&i| self.x[[i, feature]] <= threshold);
                let left = self.grow(l);
                let right = self.grow(r);
                self.nodes[id] = Node::Split { feature, threshold, left, right };
            }
        }
        id
    }
}

pub(super) fn fit(p: &ForestParams, x: &Array2<f64>, y: &[u8], rng: &SeedStream) -> Result<Forest> {
    let d = x.ncols();
    if p.n_trees == 0 || d == 0 || p.max_features == Some(0) {
        return Err(Error::InvalidParameter("forest needs trees, features and max_features >= 1".into()));
    }
    let mtry = p.max_features.unwrap_or(((d as f64).sqrt().floor() as usize).max(1)).min(d);
    let n = y.len();
    let trees = (0..p.n_trees as u64)
        .into_par_iter()
        .map(|t| {
            let mut r = rng.derive(t).rng();
            let rows: Vec<usize> = if p.bootstrap {
                (0..n).map(|_| r.random_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            let mut b = Builder { x, y, mtry, rng: r, nodes: Vec::new() };
            b.grow(rows);
            Tree { nodes: b.nodes }
        })
        .collect();
    Ok(Forest { trees, n_features: d })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::tests::gaussian_data;
    use ndarray::array;

    #[test]
    fn gini_values() {
        assert_eq!(gini(0, 4), 0.0);
        assert_eq!(gini(2, 4), 0.5);
    }

    #[test]
    fn single_tree_without_bootstrap_fits_training_data() {
        let ds = gaussian_data(80, 3, 0, 0.5, 2);
        let p = ForestParams { n_trees: 1, max_features: Some(3), bootstrap: false };
        let f = fit(&p, ds.features(), ds.labels(), &SeedStream::new(1)).unwrap();
        let s = f.score(ds.features());
        let expect: Vec<f64> = ds.labels().iter().map(|&l| f64::from(l)).collect();
        assert_eq!(s, expect);
    }

    #[test]
    fn unanimous_scores_are_binary_and_threshold_splits_once() {
        let x = array![[0.0], [1.0], [2.0], [3.0]];
        let p = ForestParams { n_trees: 7, max_features: None, bootstrap: false };
        let f = fit(&p, &x, &[0, 0, 1, 1], &SeedStream::new(3)).unwrap();
        assert!(f.trees.iter().all(|t| t.n_leaves() == 2));
        assert_eq!(f.score(&array![[1.4], [1.6]]), vec![0.0, 1.0]);
    }

    #[test]
    fn duplicate_rows_with_conflicting_labels_stop_splitting() {
        let x = array![[1.0, 1.0], [1.0, 1.0], [1.0, 1.0]];
        let p = ForestParams { n_trees: 1, max_features: None, bootstrap: false };
        let f = fit(&p, &x, &[1, 1, 0], &SeedStream::new(3)).unwrap();
        assert_eq!(f.score(&x), vec![1.0; 3]);
    }
}
