//! Multiclass classifiers over sparse feature vectors.

mod format;
mod gbdt;
mod logreg;
mod naive_bayes;
pub mod tree;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use format::{
    deserialize_model, deserialize_model_as, read_container, serialize_model, write_container, FORMAT_MAGIC,
    FORMAT_VERSION,
};
pub use gbdt::{train_gbdt, train_gbdt_with_history, GradientBoostedEnsemble, TrainConfig};
pub use logreg::{logreg_gradient, logreg_objective, train_logreg, LogisticRegressionModel};
pub use naive_bayes::{train_naive_bayes, NaiveBayesModel};
pub use tree::{DecisionTree, TreeNode};

use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::features::SparseVector;

pub trait Classifier {
    fn predict_proba(&self, x: &SparseVector) -> Result<[f64; Label::COUNT]>;

    fn predict(&self, x: &SparseVector) -> Result<(Label, [f64; Label::COUNT])> {
        let p = self.predict_proba(x)?;
        Ok((argmax(&p), p))
    }
}

/// Highest-probability label; exact ties go to the earlier label in canonical order.
pub fn argmax(p: &[f64; Label::COUNT]) -> Label {
    let mut best = 0;
    for k in 1..Label::COUNT {
        if p[k] > p[best] {
            best = k;
        }
    }
    Label::ALL[best]
}

pub(crate) fn softmax(s: &[f64; Label::COUNT]) -> [f64; Label::COUNT] {
    let max = s.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut e = [0.0; Label::COUNT];
    for k in 0..Label::COUNT {
        e[k] = (s[k] - max).exp();
    }
    let z: f64 = e.iter().sum();
    for v in &mut e {
        *v /= z;
    }
    e
}

/// Returns the shared dimension of `x`.
pub(crate) fn check_training_data(x: &[SparseVector], y: &[Label]) -> Result<usize> {
    if x.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if x.len() != y.len() {
        return Err(Error::InvalidArgument(format!(
            "{} feature vectors but {} labels",
            x.len(),
            y.len()
        )));
    }
    let dim = x[0].dim();
    if let Some(bad) = x.iter().find(|v| v.dim() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: bad.dim(),
        });
    }
    Ok(dim)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MajorityModel {
    counts: [usize; Label::COUNT],
}

impl MajorityModel {
    pub fn label(&self) -> Label {
        let mut best = 0;
        for k in 1..Label::COUNT {
            if self.counts[k] > self.counts[best] {
                best = k;
            }
        }
        Label::ALL[best]
    }

    pub fn counts(&self) -> [usize; Label::COUNT] {
        self.counts
    }
}

impl Classifier for MajorityModel {
    /// Training label frequencies, whatever the input.
    fn predict_proba(&self, _x: &SparseVector) -> Result<[f64; Label::COUNT]> {
        let n: usize = self.counts.iter().sum();
        let mut p = [0.0; Label::COUNT];
        for k in 0..Label::COUNT {
            p[k] = self.counts[k] as f64 / n as f64;
        }
        Ok(p)
    }

    fn predict(&self, x: &SparseVector) -> Result<(Label, [f64; Label::COUNT])> {
        Ok((self.label(), self.predict_proba(x)?))
    }
}

pub fn majority_baseline(y: &[Label]) -> Result<MajorityModel> {
    if y.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut counts = [0; Label::COUNT];
    for l in y {
        counts[l.index()] += 1;
    }
    Ok(MajorityModel { counts })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Gbdt,
    Logreg,
    NaiveBayes,
    Majority,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Gbdt => "gbdt",
            ModelKind::Logreg => "logreg",
            ModelKind::NaiveBayes => "naive-bayes",
            ModelKind::Majority => "majority",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "gbdt" | "xgboost" | "boosting" => Ok(ModelKind::Gbdt),
            "logreg" | "logistic-regression" => Ok(ModelKind::Logreg),
            "naive-bayes" | "nb" => Ok(ModelKind::NaiveBayes),
            "majority" => Ok(ModelKind::Majority),
            other => Err(Error::InvalidArgument(format!("unknown model type `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Model {
    Gbdt(GradientBoostedEnsemble),
    Logreg(LogisticRegressionModel),
    NaiveBayes(NaiveBayesModel),
    Majority(MajorityModel),
}

impl Model {
    pub fn kind(&self) -> ModelKind {
        match self {
            Model::Gbdt(_) => ModelKind::Gbdt,
            Model::Logreg(_) => ModelKind::Logreg,
            Model::NaiveBayes(_) => ModelKind::NaiveBayes,
            Model::Majority(_) => ModelKind::Majority,
        }
    }
}

impl Classifier for Model {
    fn predict_proba(&self, x: &SparseVector) -> Result<[f64; Label::COUNT]> {
        match self {
            Model::Gbdt(m) => m.predict_proba(x),
            Model::Logreg(m) => m.predict_proba(x),
            Model::NaiveBayes(m) => m.predict_proba(x),
            Model::Majority(m) => m.predict_proba(x),
        }
    }

    fn predict(&self, x: &SparseVector) -> Result<(Label, [f64; Label::COUNT])> {
        match self {
            Model::Majority(m) => m.predict(x),
            other => {
                let p = other.predict_proba(x)?;
                Ok((argmax(&p), p))
            }
        }
    }
}

/// Hyper-parameters for every model type, with defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub gbdt: TrainConfig,
    pub l2: f64,
    pub iterations: usize,
    pub alpha: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            gbdt: TrainConfig::default(),
            l2: 1e-4,
            iterations: 200,
            alpha: 1.0,
        }
    }
}

pub fn train_model(kind: ModelKind, x: &[SparseVector], y: &[Label], params: &ModelParams) -> Result<Model> {
    Ok(match kind {
        ModelKind::Gbdt => Model::Gbdt(train_gbdt(x, y, &params.gbdt)?),
        ModelKind::Logreg => Model::Logreg(train_logreg(x, y, params.l2, params.iterations)?),
        ModelKind::NaiveBayes => Model::NaiveBayes(train_naive_bayes(x, y, params.alpha)?),
        ModelKind::Majority => Model::Majority(majority_baseline(y)?),
    })
}
