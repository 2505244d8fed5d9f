//! Multinomial logistic regression trained by full-batch gradient descent.

use serde::{Deserialize, Serialize};

use super::{check_training_data, softmax, Classifier};
use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::features::SparseVector;

const INITIAL_STEP: f64 = 1.0;
const MAX_HALVINGS: usize = 60;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticRegressionModel {
    dim: usize,
    /// Row-major, `Label::COUNT × dim`.
    weights: Vec<f64>,
    bias: [f64; Label::COUNT],
    l2: f64,
}

impl LogisticRegressionModel {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> [f64; Label::COUNT] {
        self.bias
    }

    pub fn l2(&self) -> f64 {
        self.l2
    }
}

impl Classifier for LogisticRegressionModel {
    fn predict_proba(&self, x: &SparseVector) -> Result<[f64; Label::COUNT]> {
        if x.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: x.dim(),
            });
        }
        Ok(softmax(&scores(&self.weights, &self.bias, self.dim, x)))
    }
}

fn scores(w: &[f64], b: &[f64; Label::COUNT], dim: usize, x: &SparseVector) -> [f64; Label::COUNT] {
    let mut s = *b;
    for (k, sk) in s.iter_mut().enumerate() {
        let row = &w[k * dim..(k + 1) * dim];
        for (j, v) in x.iter() {
            *sk += row[j] * v;
        }
    }
    s
}

/// Mean cross-entropy plus `(l2 / 2)·‖W‖²`; the bias is not penalized.
pub fn logreg_objective(
    w: &[f64],
    b: &[f64; Label::COUNT],
    x: &[SparseVector],
    y: &[Label],
    l2: f64,
) -> f64 {
    let dim = w.len() / Label::COUNT;
    let mut loss = 0.0;
    for (xi, yi) in x.iter().zip(y) {
        let s = scores(w, b, dim, xi);
        let max = s.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + s.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        loss += lse - s[yi.index()];
    }
    loss / x.len() as f64 + 0.5 * l2 * w.iter().map(|v| v * v).sum::<f64>()
}

/// Gradient of [`logreg_objective`] with respect to the weights and the bias.
pub fn logreg_gradient(
    w: &[f64],
    b: &[f64; Label::COUNT],
    x: &[SparseVector],
    y: &[Label],
    l2: f64,
) -> (Vec<f64>, [f64; Label::COUNT]) {
    let dim = w.len() / Label::COUNT;
    let n = x.len() as f64;
    let mut gw = vec![0.0; w.len()];
    let mut gb = [0.0; Label::COUNT];
    for (xi, yi) in x.iter().zip(y) {
        let p = softmax(&scores(w, b, dim, xi));
        for k in 0..Label::COUNT {
            let r = p[k] - if yi.index() == k { 1.0 } else { 0.0 };
            gb[k] += r;
            for (j, v) in xi.iter() {
                gw[k * dim + j] += r * v;
            }
        }
    }
    for (g, wv) in gw.iter_mut().zip(w) {
        *g = *g / n + l2 * wv;
    }
    for g in &mut gb {
        *g /= n;
    }
    (gw, gb)
}

pub fn train_logreg(x: &[SparseVector], y: &[Label], l2: f64, iterations: usize) -> Result<LogisticRegressionModel> {
    let dim = check_training_data(x, y)?;
    if !(l2 >= 0.0) || !l2.is_finite() {
        return Err(Error::InvalidArgument(format!("l2 strength {l2} must be finite and nonnegative")));
    }
    let mut w = vec![0.0; Label::COUNT * dim];
    let mut b = [0.0; Label::COUNT];
    let mut objective = logreg_objective(&w, &b, x, y, l2);
    let mut step = INITIAL_STEP;
    'outer: for _ in 0..iterations {
        let (gw, gb) = logreg_gradient(&w, &b, x, y, l2);
        for _ in 0..MAX_HALVINGS {
            let cand_w: Vec<f64> = w.iter().zip(&gw).map(|(a, g)| a - step * g).collect();
            let mut cand_b = b;
            for k in 0..Label::COUNT {
                cand_b[k] -= step * gb[k];
            }
            let cand = logreg_objective(&cand_w, &cand_b, x, y, l2);
            if cand < objective {
                w = cand_w;
                b = cand_b;
                objective = cand;
                continue 'outer;
            }
            step *= 0.5;
        }
        break;
    }
    Ok(LogisticRegressionModel { dim, weights: w, bias: b, l2 })
}
