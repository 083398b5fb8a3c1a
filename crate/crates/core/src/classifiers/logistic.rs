use nalgebra::{DMatrix, DVector};
use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::net::sigmoid;

/// L2-penalized logistic regression: minimizes
/// `c * sum(logloss) + ||w||^2 / 2`, intercept unpenalized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LogisticParams {
    pub c: f64,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for LogisticParams {
    fn default() -> Self {
        LogisticParams {
            c: 1.0,
            max_iter: 1000,
            tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticModel {
    pub weights: Array1<f64>,
    pub intercept: f64,
    pub iterations: usize,
    /// Max-norm of the objective gradient at the returned solution.
    pub gradient_norm: f64,
}

impl LogisticModel {
    pub fn score(&self, x: &Array2<f64>) -> Vec<f64> {
        (x.dot(&self.weights) + self.intercept).mapv(sigmoid).to_vec()
    }
}

fn objective(c: f64, x: &DMatrix<f64>, y: &DVector<f64>, beta: &DVector<f64>) -> f64 {
    let d = beta.len() - 1;
    let z = x * beta;
    let loss: f64 = z
        .iter()
        .zip(y.iter())
        .map(|(&z, &t)| z.max(0.0) - z * t + (-z.abs()).exp().ln_1p())
        .sum();
    c * loss + 0.5 * beta.rows(0, d).norm_squared()
}

/// Damped Newton iterations on the penalized objective.
pub(super) fn fit(p: &LogisticParams, features: &Array2<f64>, labels: &[u8]) -> Result<LogisticModel> {
    if !(p.c > 0.0) || p.max_iter == 0 {
        return Err(Error::InvalidParameter("LR needs c > 0 and max_iter >= 1".into()));
    }
    let (n, d) = features.dim();
    // design matrix with a trailing intercept column
    let x = DMatrix::from_fn(n, d + 1, |i, j| if j < d { features[[i, j]] } else { 1.0 });
    let y = DVector::from_iterator(n, labels.iter().map(|&l| f64::from(l)));
    let mut beta = DVector::zeros(d + 1);
    let mut f = objective(p.c, &x, &y, &beta);
    let mut iterations = 0;
    let mut grad_norm = f64::INFINITY;
    for it in 0..=p.max_iter {
        let prob = (&x * &beta).map(sigmoid);
        let mut grad = x.tr_mul(&(&prob - &y)) * p.c;
        for j in 0..d {
            grad[j] += beta[j];
        }
        grad_norm = grad.amax();
        iterations = it;
        if grad_norm <= p.tol || it == p.max_iter {
            break;
        }
        let w = prob.map(|q| p.c * q * (1.0 - q));
        let mut xw = x.clone();
        for (i, mut row) in xw.row_iter_mut().enumerate() {
            row *= w[i];
        }
        let mut hess = x.tr_mul(&xw);
        for j in 0..d {
            hess[(j, j)] += 1.0;
        }
        let step = match hess.clone().cholesky() {
            Some(ch) => ch.solve(&grad),
            None => hess.lu().solve(&grad).unwrap_or_else(|| grad.clone()),
        };
        let mut t = 1.0;
        loop {
            let cand = &beta - &step * t;
            let fc = objective(p.c, &x, &y, &cand);
            if fc <= f || t < 1e-10 {
                beta = cand;
                f = fc;
                break;
            }
            t *= 0.5;
        }
    }
    if beta.iter().any(|v| !v.is_finite()) {
        return Err(Error::Diverged {
            epoch: iterations,
            detail: "logistic regression produced non-finite weights".into(),
        });
    }
    Ok(LogisticModel {
        weights: Array1::from_iter(beta.rows(0, d).iter().copied()),
        intercept: beta[d],
        iterations,
        gradient_norm: grad_norm,
    })
}
