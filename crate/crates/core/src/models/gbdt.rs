//! Multiclass gradient boosting: per round, one regression tree per label
//! category fitted to the softmax cross-entropy gradient.

use serde::{Deserialize, Serialize};

use super::tree::{grow_tree, DecisionTree, FeatureColumns, TreeParams};
use super::{check_training_data, softmax, Classifier};
use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::features::SparseVector;

/// Raw score given to absent categories when the training labels hold a single category.
const ABSENT_SCORE: f64 = -30.0;
const MIN_HESSIAN: f64 = 1e-16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub estimators: usize,
    pub shrinkage: f64,
    pub max_depth: usize,
    pub min_child_weight: f64,
    /// L2 penalty on leaf weights.
    pub lambda: f64,
    /// No subsampling is done; kept so configurations are reproducible verbatim.
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            estimators: 1000,
            shrinkage: 0.1,
            max_depth: 6,
            min_child_weight: 1.0,
            lambda: 1.0,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.estimators < 1 {
            problems.push("estimators must be at least 1".to_string());
        }
        if !(self.shrinkage > 0.0 && self.shrinkage <= 1.0) {
            problems.push(format!("shrinkage {} is outside (0, 1]", self.shrinkage));
        }
        if self.max_depth < 1 {
            problems.push("max depth must be at least 1".to_string());
        }
        if !(self.min_child_weight >= 0.0) {
            problems.push(format!("min child weight {} is negative", self.min_child_weight));
        }
        if !(self.lambda >= 0.0) {
            problems.push(format!("lambda {} is negative", self.lambda));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidArgument(problems.join("; ")))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientBoostedEnsemble {
    dim: usize,
    shrinkage: f64,
    initial: [f64; Label::COUNT],
    /// `trees[k][m]` is the round-`m` tree of category `k`.
    trees: Vec<Vec<DecisionTree>>,
}

impl GradientBoostedEnsemble {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn shrinkage(&self) -> f64 {
        self.shrinkage
    }

    pub fn initial_scores(&self) -> [f64; Label::COUNT] {
        self.initial
    }

    pub fn rounds(&self) -> usize {
        self.trees[0].len()
    }

    pub fn trees(&self, label: Label) -> &[DecisionTree] {
        &self.trees[label.index()]
    }

    pub fn raw_scores(&self, x: &SparseVector) -> Result<[f64; Label::COUNT]> {
        if x.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: x.dim(),
            });
        }
        let mut raw = self.initial;
        for (k, trees) in self.trees.iter().enumerate() {
            for tree in trees {
                raw[k] += self.shrinkage * tree.predict(x);
            }
        }
        Ok(raw)
    }
}

impl Classifier for GradientBoostedEnsemble {
    fn predict_proba(&self, x: &SparseVector) -> Result<[f64; Label::COUNT]> {
        Ok(softmax(&self.raw_scores(x)?))
    }
}

pub fn train_gbdt(x: &[SparseVector], y: &[Label], cfg: &TrainConfig) -> Result<GradientBoostedEnsemble> {
    train_gbdt_with_history(x, y, cfg).map(|(model, _)| model)
}

/// Mean training cross-entropy before the first round and after every round.
pub fn train_gbdt_with_history(
    x: &[SparseVector],
    y: &[Label],
    cfg: &TrainConfig,
) -> Result<(GradientBoostedEnsemble, Vec<f64>)> {
    cfg.validate()?;
    let dim = check_training_data(x, y)?;

    // Canonical row order makes the fit independent of input order.
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| compare_rows(&x[a], &x[b]).then(y[a].cmp(&y[b])));
    let rows: Vec<SparseVector> = order.iter().map(|&i| x[i].clone()).collect();
    let labels: Vec<Label> = order.iter().map(|&i| y[i]).collect();
    let n = rows.len();

    let mut present = [false; Label::COUNT];
    for l in &labels {
        present[l.index()] = true;
    }
    let initial = if present.iter().filter(|&&p| p).count() == 1 {
        let mut s = [ABSENT_SCORE; Label::COUNT];
        for k in 0..Label::COUNT {
            if present[k] {
                s[k] = 0.0;
            }
        }
        s
    } else {
        [0.0; Label::COUNT]
    };

    let columns = FeatureColumns::new(&rows, dim);
    let params = TreeParams {
        max_depth: cfg.max_depth,
        min_child_weight: cfg.min_child_weight,
        lambda: cfg.lambda,
    };
    let mut raw: Vec<[f64; Label::COUNT]> = vec![initial; n];
    let mut trees: Vec<Vec<DecisionTree>> = vec![Vec::with_capacity(cfg.estimators); Label::COUNT];
    let mut history = Vec::with_capacity(cfg.estimators + 1);
    history.push(mean_cross_entropy(&raw, &labels));

    let mut grad = vec![0.0; n];
    let mut hess = vec![0.0; n];
    for _round in 0..cfg.estimators {
        let probs: Vec<[f64; Label::COUNT]> = raw.iter().map(softmax).collect();
        let mut updates: Vec<Vec<f64>> = Vec::with_capacity(Label::COUNT);
        for k in 0..Label::COUNT {
            for i in 0..n {
                let p = probs[i][k];
                let target = if labels[i].index() == k { 1.0 } else { 0.0 };
                grad[i] = p - target;
                hess[i] = (2.0 * p * (1.0 - p)).max(MIN_HESSIAN);
            }
            let (tree, per_row) = grow_tree(&rows, &columns, &grad, &hess, params);
            trees[k].push(tree);
            updates.push(per_row);
        }
        for (k, per_row) in updates.iter().enumerate() {
            for i in 0..n {
                raw[i][k] += cfg.shrinkage * per_row[i];
            }
        }
        history.push(mean_cross_entropy(&raw, &labels));
    }

    Ok((
        GradientBoostedEnsemble {
            dim,
            shrinkage: cfg.shrinkage,
            initial,
            trees,
        },
        history,
    ))
}

fn compare_rows(a: &SparseVector, b: &SparseVector) -> std::cmp::Ordering {
    let ea = a.entries();
    let eb = b.entries();
    for (p, q) in ea.iter().zip(eb) {
        let ord = p.0.cmp(&q.0).then(p.1.total_cmp(&q.1));
        if ord.is_ne() {
            return ord;
        }
    }
    ea.len().cmp(&eb.len())
}

fn mean_cross_entropy(raw: &[[f64; Label::COUNT]], labels: &[Label]) -> f64 {
    let mut total = 0.0;
    for (r, l) in raw.iter().zip(labels) {
        let max = r.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + r.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        total += lse - r[l.index()];
    }
    total / labels.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::Classifier;

    fn scalar(v: f64) -> SparseVector {
        SparseVector::from_dense(&[v])
    }

    #[test]
    fn all_none_is_constant() {
        let x: Vec<SparseVector> = (0..5).map(|i| scalar(i as f64)).collect();
        let y = vec![Label::None; 5];
        let cfg = TrainConfig {
            estimators: 10,
            ..TrainConfig::default()
        };
        let m = train_gbdt(&x, &y, &cfg).unwrap();
        for v in [-3.0, 0.0, 2.5, 100.0] {
            let p = m.predict_proba(&scalar(v)).unwrap();
            assert!(p[Label::None.index()] >= 0.99);
        }
        assert_eq!(m.rounds(), 10);
    }

    #[test]
    fn two_point_example() {
        let x = vec![scalar(0.0), scalar(1.0)];
        let y = vec![Label::Better, Label::Worse];
        let cfg = TrainConfig {
            estimators: 10,
            shrinkage: 0.5,
            max_depth: 1,
            // the hessian of a single point at p = 1/3 is 4/9, below the default of 1
            min_child_weight: 0.0,
            ..TrainConfig::default()
        };
        let (m, history) = train_gbdt_with_history(&x, &y, &cfg).unwrap();
        assert_eq!(m.predict(&scalar(0.0)).unwrap().0, Label::Better);
        assert_eq!(m.predict(&scalar(1.0)).unwrap().0, Label::Worse);

        // first round by hand: BETTER tree, gradient at x=0 is 1/3 - 1 = -2/3,
        // hessian 4/9, leaf = (2/3) / (4/9 + 1) = 6/13
        let first = &m.trees(Label::Better)[0];
        assert!((first.predict(&scalar(0.0)) - 6.0 / 13.0).abs() < 1e-12);
        assert!((first.predict(&scalar(1.0)) + 3.0 / 13.0).abs() < 1e-12);
        for w in history.windows(2) {
            assert!(w[1] <= w[0] + 1e-9);
        }
    }

    #[test]
    fn errors() {
        assert!(train_gbdt(&[], &[], &TrainConfig::default()).is_err());
        let bad = TrainConfig {
            shrinkage: 0.0,
            ..TrainConfig::default()
        };
        assert!(train_gbdt(&[scalar(1.0)], &[Label::None], &bad).is_err());
        let x = vec![scalar(1.0), SparseVector::zeros(2)];
        assert!(train_gbdt(&x, &[Label::None, Label::Better], &TrainConfig::default()).is_err());
        let m = train_gbdt(&[scalar(1.0)], &[Label::None], &TrainConfig { estimators: 1, ..TrainConfig::default() }).unwrap();
        assert!(matches!(
            m.predict_proba(&SparseVector::zeros(3)),
            Err(Error::DimensionMismatch { expected: 1, actual: 3 })
        ));
    }
}
