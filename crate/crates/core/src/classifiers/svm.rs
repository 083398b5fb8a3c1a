use ndarray::{Array1, Array2, ArrayView1, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::util::squared_distance;

const TAU: f64 = 1e-12;

/// Soft-margin SVM with a radial basis kernel. `gamma = None` means
/// `1 / (d * Var(X))` over all feature entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SvmParams {
    pub c: f64,
    pub gamma: Option<f64>,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams {
            c: 1.0,
            gamma: None,
            tol: 1e-3,
            max_iter: 10_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    pub support: Array2<f64>,
    /// `alpha_i * y_i` for each support vector.
    pub dual_coef: Array1<f64>,
    pub rho: f64,
    pub gamma: f64,
    pub iterations: usize,
}

impl SvmModel {
    pub fn score(&self, x: &Array2<f64>) -> Vec<f64> {
        (0..x.nrows())
            .into_par_iter()
            .map(|i| {
                let row = x.row(i);
                self.support
                    .axis_iter(Axis(0))
                    .zip(self.dual_coef.iter())
                    .map(|(sv, &c)| c * rbf(self.gamma, row, sv))
                    .sum::<f64>()
                    - self.rho
            })
            .collect()
    }
}

fn rbf(gamma: f64, a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    (-gamma * squared_distance(a, b)).exp()
}

pub fn default_gamma(x: &Array2<f64>) -> f64 {
    let var = x.var(0.0);
    if var > 0.0 {
        1.0 / (x.ncols() as f64 * var)
    } else {
        1.0
    }
}

/// Dual solution before support-vector extraction; kept for KKT checks.
pub(super) struct DualSolution {
    pub alpha: Vec<f64>,
    pub y: Vec<f64>,
    pub rho: f64,
    pub iterations: usize,
}

/// Sequential minimal optimization with second-order working-set selection.
pub(super) fn solve_dual(kernel: &Array2<f64>, y: &[f64], c: f64, tol: f64, max_iter: usize) -> DualSolution {
    let n = y.len();
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let q = |i: usize, j: usize| y[i] * y[j] * kernel[[i, j]];
    let in_up = |a: f64, yt: f64| (yt > 0.0 && a < c) || (yt < 0.0 && a > 0.0);
    let in_low = |a: f64, yt: f64| (yt > 0.0 && a > 0.0) || (yt < 0.0 && a < c);
    let mut iterations = 0;
    while iterations < max_iter {
        let mut gmax = f64::NEG_INFINITY;
        let mut i = usize::MAX;
        for t in 0..n {
            if in_up(alpha[t], y[t]) && -y[t] * grad[t] >= gmax && (-y[t] * grad[t] > gmax || i == usize::MAX) {
                gmax = -y[t] * grad[t];
                i = t;
            }
        }
        let mut gmin = f64::INFINITY;
        let mut j = usize::MAX;
        let mut best = f64::INFINITY;
        for t in 0..n {
            if !in_low(alpha[t], y[t]) {
                continue;
            }
            let v = -y[t] * grad[t];
            gmin = gmin.min(v);
            if i != usize::MAX && v < gmax {
                let b = gmax - v;
                let a = kernel[[i, i]] + kernel[[t, t]] - 2.0 * kernel[[i, t]];
                let obj = -(b * b) / if a > 0.0 { a } else { TAU };
                if obj < best {
                    best = obj;
                    j = t;
                }
            }
        }
        if i == usize::MAX || j == usize::MAX || gmax - gmin < tol {
            break;
        }
        iterations += 1;
        let (old_i, old_j) = (alpha[i], alpha[j]);
        if y[i] != y[j] {
            let quad = (kernel[[i, i]] + kernel[[j, j]] - 2.0 * kernel[[i, j]]).max(TAU);
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let quad = (kernel[[i, i]] + kernel[[j, j]] - 2.0 * kernel[[i, j]]).max(TAU);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for (t, g) in grad.iter_mut().enumerate() {
            *g += q(t, i) * di + q(t, j) * dj;
        }
    }

    // offset from free variables, else midpoint of the feasible interval
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut sum_free, mut n_free) = (0.0, 0usize);
    for t in 0..n {
        let yg = y[t] * grad[t];
        if alpha[t] > 0.0 && alpha[t] < c {
            sum_free += yg;
            n_free += 1;
        } else if (alpha[t] >= c && y[t] < 0.0) || (alpha[t] <= 0.0 && y[t] > 0.0) {
            ub = ub.min(yg);
        } else {
            lb = lb.max(yg);
        }
    }
    let rho = if n_free > 0 { sum_free / n_free as f64 } else { (ub + lb) / 2.0 };
    DualSolution {
        alpha,
        y: y.to_vec(),
        rho,
        iterations,
    }
}

pub(super) fn kernel_matrix(x: &Array2<f64>, gamma: f64) -> Array2<f64> {
    let n = x.nrows();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| (0..n).map(|j| rbf(gamma, x.row(i), x.row(j))).collect())
        .collect();
    Array2::from_shape_fn((n, n), |(i, j)| rows[i][j])
}

pub(super) fn fit(p: &SvmParams, x: &Array2<f64>, labels: &[u8]) -> Result<SvmModel> {
    if !(p.c > 0.0) || !(p.tol > 0.0) || p.gamma.is_some_and(|g| !(g > 0.0)) {
        return Err(Error::InvalidParameter("SVM needs c, tol and gamma positive".into()));
    }
    let gamma = p.gamma.unwrap_or_else(|| default_gamma(x));
    let y: Vec<f64> = labels.iter().map(|&l| if l == 1 { 1.0 } else { -1.0 }).collect();
    let sol = solve_dual(&kernel_matrix(x, gamma), &y, p.c, p.tol, p.max_iter);
    let sv: Vec<usize> = (0..y.len()).filter(|&i| sol.alpha[i] > 0.0).collect();
    Ok(SvmModel {
        support: x.select(Axis(0), &sv),
        dual_coef: sv.iter().map(|&i| sol.alpha[i] * sol.y[i]).collect(),
        rho: sol.rho,
        gamma,
        iterations: sol.iterations,
    })
}
