//! Multinomial naive Bayes with additive smoothing.
//!
//! Only sufficient statistics are stored; log tables are rebuilt on load so a
//! category absent from training (log prior `-inf`) survives serialization.

use serde::{Deserialize, Serialize};

use super::{check_training_data, Classifier};
use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::features::SparseVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "NaiveBayesRepr", into = "NaiveBayesRepr")]
pub struct NaiveBayesModel {
    repr: NaiveBayesRepr,
    log_prior: [f64; Label::COUNT],
    /// Row-major, `Label::COUNT × dim`.
    log_likelihood: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct NaiveBayesRepr {
    dim: usize,
    alpha: f64,
    class_docs: [usize; Label::COUNT],
    feature_totals: Vec<f64>,
}

impl From<NaiveBayesRepr> for NaiveBayesModel {
    fn from(repr: NaiveBayesRepr) -> Self {
        let n: usize = repr.class_docs.iter().sum();
        let mut log_prior = [f64::NEG_INFINITY; Label::COUNT];
        let mut log_likelihood = vec![0.0; Label::COUNT * repr.dim];
        for k in 0..Label::COUNT {
            if repr.class_docs[k] > 0 {
                log_prior[k] = (repr.class_docs[k] as f64 / n as f64).ln();
            }
            let row = &repr.feature_totals[k * repr.dim..(k + 1) * repr.dim];
            let denom = (row.iter().sum::<f64>() + repr.alpha * repr.dim as f64).ln();
            for (j, c) in row.iter().enumerate() {
                log_likelihood[k * repr.dim + j] = (c + repr.alpha).ln() - denom;
            }
        }
        NaiveBayesModel {
            repr,
            log_prior,
            log_likelihood,
        }
    }
}

impl From<NaiveBayesModel> for NaiveBayesRepr {
    fn from(m: NaiveBayesModel) -> Self {
        m.repr
    }
}

impl NaiveBayesModel {
    pub fn dim(&self) -> usize {
        self.repr.dim
    }

    pub fn alpha(&self) -> f64 {
        self.repr.alpha
    }

    pub fn log_prior(&self) -> [f64; Label::COUNT] {
        self.log_prior
    }

    pub fn log_likelihood(&self, label: Label, feature: usize) -> f64 {
        self.log_likelihood[label.index() * self.repr.dim + feature]
    }
}

impl Classifier for NaiveBayesModel {
    fn predict_proba(&self, x: &SparseVector) -> Result<[f64; Label::COUNT]> {
        let dim = self.repr.dim;
        if x.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: x.dim(),
            });
        }
        let mut s = self.log_prior;
        for (k, sk) in s.iter_mut().enumerate() {
            if sk.is_finite() {
                for (j, v) in x.iter() {
                    *sk += v * self.log_likelihood[k * dim + j];
                }
            }
        }
        Ok(super::softmax(&s))
    }
}

pub fn train_naive_bayes(x: &[SparseVector], y: &[Label], alpha: f64) -> Result<NaiveBayesModel> {
    let dim = check_training_data(x, y)?;
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::InvalidArgument(format!("alpha {alpha} must be positive")));
    }
    let mut class_docs = [0usize; Label::COUNT];
    let mut feature_totals = vec![0.0; Label::COUNT * dim];
    for (i, (xi, yi)) in x.iter().zip(y).enumerate() {
        let k = yi.index();
        class_docs[k] += 1;
        for (j, v) in xi.iter() {
            if v < 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "negative feature value {v} at row {i}, feature {j}"
                )));
            }
            feature_totals[k * dim + j] += v;
        }
    }
    Ok(NaiveBayesRepr {
        dim,
        alpha,
        class_docs,
        feature_totals,
    }
    .into())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disjoint_documents() {
        let x = vec![
            SparseVector::from_dense(&[1.0, 0.0, 0.0]),
            SparseVector::from_dense(&[0.0, 1.0, 0.0]),
            SparseVector::from_dense(&[0.0, 0.0, 1.0]),
        ];
        let y = vec![Label::None, Label::Better, Label::Worse];
        let m = train_naive_bayes(&x, &y, 1.0).unwrap();
        for (xi, yi) in x.iter().zip(&y) {
            assert_eq!(m.predict(xi).unwrap().0, *yi);
        }
    }

    #[test]
    fn unseen_term_is_neutral() {
        let x = vec![SparseVector::from_dense(&[2.0, 0.0, 0.0]), SparseVector::from_dense(&[0.0, 2.0, 0.0])];
        let m = train_naive_bayes(&x, &[Label::Better, Label::Worse], 1.0).unwrap();
        // both categories saw two tokens, neither saw feature 2
        assert_eq!(m.log_likelihood(Label::Better, 2), m.log_likelihood(Label::Worse, 2));
    }

    #[test]
    fn hand_posterior() {
        // BETTER doc: term0 ×2; WORSE doc: term0, term1; alpha 1
        // P(t0|B)=3/4 P(t1|B)=1/4, P(t0|W)=2/4 P(t1|W)=2/4, priors 1/2
        // query t1: B ∝ 1/4, W ∝ 1/2 → P(W) = 2/3
        let x = vec![SparseVector::from_dense(&[2.0, 0.0]), SparseVector::from_dense(&[1.0, 1.0])];
        let m = train_naive_bayes(&x, &[Label::Better, Label::Worse], 1.0).unwrap();
        let p = m.predict_proba(&SparseVector::from_dense(&[0.0, 1.0])).unwrap();
        assert!((p[Label::Worse.index()] - 2.0 / 3.0).abs() < 1e-12);
        assert!((p[Label::Better.index()] - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(p[Label::None.index()], 0.0);
    }

    #[test]
    fn likelihoods_normalize() {
        let x = vec![SparseVector::from_dense(&[3.0, 1.0, 0.0]), SparseVector::from_dense(&[0.0, 0.5, 2.0])];
        let m = train_naive_bayes(&x, &[Label::None, Label::Worse], 0.3).unwrap();
        for l in Label::ALL {
            let total: f64 = (0..3).map(|j| m.log_likelihood(l, j).exp()).sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn errors() {
        let x = vec![SparseVector::from_dense(&[-1.0])];
        assert!(train_naive_bayes(&x, &[Label::None], 1.0).is_err());
        let x = vec![SparseVector::from_dense(&[1.0])];
        assert!(train_naive_bayes(&x, &[Label::None], 0.0).is_err());
        assert!(train_naive_bayes(&[], &[], 1.0).is_err());
    }
}
