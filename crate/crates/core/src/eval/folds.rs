use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{compute_metrics, EvalReport};
use crate::corpus::{label_strata, Dataset, Label};
use crate::error::{Error, Result};
use crate::render::{csv_cell, fmt4, markdown_table};
use crate::rng;

/// Fold membership as sorted dataset indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub folds: Vec<Vec<usize>>,
}

impl FoldPlan {
    pub fn test_indices(&self, fold: usize) -> &[usize] {
        &self.folds[fold]
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .folds
            .iter()
            .enumerate()
            .filter(|(f, _)| *f != fold)
            .flat_map(|(_, idx)| idx.iter().copied())
            .collect();
        out.sort_unstable();
        out
    }

    pub fn fold_ids<'a>(&self, ds: &'a Dataset, fold: usize) -> Vec<&'a str> {
        self.folds[fold].iter().map(|&i| ds.sentences()[i].id.as_str()).collect()
    }
}

/// Shuffles each label stratum with one seeded generator, then deals the
/// strata round-robin over the folds. The dealing position carries over from
/// one label to the next, which keeps fold sizes within one of each other.
pub fn stratified_kfold(ds: &Dataset, k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("k = {k}; need at least 2 folds")));
    }
    if k > ds.len() {
        return Err(Error::InvalidArgument(format!(
            "k = {k} exceeds the {} sentences available",
            ds.len()
        )));
    }
    let mut rng = rng::seeded(seed);
    let mut folds = vec![Vec::new(); k];
    let mut next = 0usize;
    for mut stratum in label_strata(&ds.labels()) {
        rng::shuffle(&mut stratum, &mut rng);
        for i in stratum {
            folds[next % k].push(i);
            next += 1;
        }
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(FoldPlan { k, folds })
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub folds: Vec<EvalReport>,
    pub mean_micro_f1: f64,
    /// Population standard deviation across folds.
    pub std_micro_f1: f64,
    pub mean_class_f1: [f64; Label::COUNT],
    pub std_class_f1: [f64; Label::COUNT],
    /// Report over all out-of-fold predictions together.
    pub pooled: EvalReport,
    /// Out-of-fold prediction for every dataset sentence.
    pub predictions: Vec<Label>,
}

impl CvReport {
    pub fn from_folds(folds: Vec<EvalReport>, pooled: EvalReport, predictions: Vec<Label>) -> CvReport {
        let micro: Vec<f64> = folds.iter().map(|r| r.micro_f1).collect();
        let (mean_micro_f1, std_micro_f1) = mean_std(&micro);
        let mut mean_class_f1 = [0.0; Label::COUNT];
        let mut std_class_f1 = [0.0; Label::COUNT];
        for k in 0..Label::COUNT {
            let v: Vec<f64> = folds.iter().map(|r| r.per_class[k].f1).collect();
            (mean_class_f1[k], std_class_f1[k]) = mean_std(&v);
        }
        CvReport {
            folds,
            mean_micro_f1,
            std_micro_f1,
            mean_class_f1,
            std_class_f1,
            pooled,
            predictions,
        }
    }

    fn rows(&self) -> Vec<Vec<String>> {
        let mut rows = vec![vec![
            "fold".to_string(),
            "micro_f1".into(),
            "f1_none".into(),
            "f1_better".into(),
            "f1_worse".into(),
        ]];
        for (i, r) in self.folds.iter().enumerate() {
            let mut row = vec![(i + 1).to_string(), fmt4(r.micro_f1)];
            row.extend(r.per_class.iter().map(|m| fmt4(m.f1)));
            rows.push(row);
        }
        let mut mean = vec!["mean".to_string(), fmt4(self.mean_micro_f1)];
        mean.extend(self.mean_class_f1.iter().map(|v| fmt4(*v)));
        rows.push(mean);
        let mut std = vec!["std".to_string(), fmt4(self.std_micro_f1)];
        std.extend(self.std_class_f1.iter().map(|v| fmt4(*v)));
        rows.push(std);
        rows
    }

    pub fn to_csv(&self) -> String {
        self.rows().iter().map(|r| r.join(",") + "\n").collect()
    }

    pub fn to_markdown(&self) -> String {
        markdown_table(&self.rows())
    }
}

/// Runs `fit_predict(train, test)` on every fold. Folds run in parallel;
/// results are assembled in fold order.
pub fn cross_validate_with<F>(ds: &Dataset, k: usize, seed: u64, fit_predict: F) -> Result<CvReport>
where
    F: Fn(&Dataset, &Dataset) -> Result<Vec<Label>> + Sync,
{
    let plan = stratified_kfold(ds, k, seed)?;
    let gold = ds.labels();
    let per_fold: Vec<Result<Vec<Label>>> = (0..k)
        .into_par_iter()
        .map(|f| {
            let train = ds.subset(&plan.train_indices(f), format!("{} | fold {} train", ds.provenance(), f + 1));
            let test = ds.subset(plan.test_indices(f), format!("{} | fold {} test", ds.provenance(), f + 1));
            let pred = fit_predict(&train, &test)?;
            if pred.len() != test.len() {
                return Err(Error::InvalidArgument(format!(
                    "fold {}: {} predictions for {} sentences",
                    f + 1,
                    pred.len(),
                    test.len()
                )));
            }
            Ok(pred)
        })
        .collect();
    let mut predictions = vec![Label::None; ds.len()];
    let mut reports = Vec::with_capacity(k);
    for (f, pred) in per_fold.into_iter().enumerate() {
        let pred = pred?;
        let idx = plan.test_indices(f);
        let fold_gold: Vec<Label> = idx.iter().map(|&i| gold[i]).collect();
        reports.push(compute_metrics(&fold_gold, &pred)?);
        for (&i, p) in idx.iter().zip(pred) {
            predictions[i] = p;
        }
    }
    let pooled = compute_metrics(&gold, &predictions)?;
    Ok(CvReport::from_folds(reports, pooled, predictions))
}

/// Micro-F1 with training domain as row and test domain as column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossDomainMatrix {
    pub domains: Vec<String>,
    pub cells: Vec<Vec<f64>>,
}

impl CrossDomainMatrix {
    pub fn cell(&self, train: &str, test: &str) -> Option<f64> {
        let r = self.domains.iter().position(|d| d == train)?;
        let c = self.domains.iter().position(|d| d == test)?;
        Some(self.cells[r][c])
    }

    fn rows(&self) -> Vec<Vec<String>> {
        let mut rows = vec![std::iter::once("train \\ test".to_string())
            .chain(self.domains.iter().cloned())
            .collect::<Vec<_>>()];
        for (d, cells) in self.domains.iter().zip(&self.cells) {
            rows.push(std::iter::once(d.clone()).chain(cells.iter().map(|v| fmt4(*v))).collect());
        }
        rows
    }

    pub fn to_csv(&self) -> String {
        self.rows()
            .iter()
            .map(|r| r.iter().map(|c| csv_cell(c)).collect::<Vec<_>>().join(",") + "\n")
            .collect()
    }

    pub fn to_markdown(&self) -> String {
        markdown_table(&self.rows())
    }
}

/// Diagonal cells use within-domain k-fold CV; off-diagonal cells train on
/// the whole row domain and test on the whole column domain. `domains` empty
/// means every domain of `ds`, sorted.
pub fn cross_domain_with<F>(
    ds: &Dataset,
    domains: &[String],
    k: usize,
    seed: u64,
    fit_predict: F,
) -> Result<CrossDomainMatrix>
where
    F: Fn(&Dataset, &Dataset) -> Result<Vec<Label>> + Sync,
{
    let present = ds.domains();
    let domains: Vec<String> = if domains.is_empty() {
        present.clone()
    } else {
        let mut d = domains.to_vec();
        d.sort();
        d.dedup();
        if let Some(missing) = d.iter().find(|x| !present.contains(x)) {
            return Err(Error::InvalidArgument(format!("domain `{missing}` not in dataset")));
        }
        d
    };
    if domains.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "cross-domain evaluation needs at least 2 domains, found {}",
            domains.len()
        )));
    }
    let parts: Vec<Dataset> = domains
        .iter()
        .map(|d| ds.filter(|s| &s.domain == d, format!("{} | domain {d}", ds.provenance())))
        .collect();
    let n = domains.len();
    let cells: Vec<Result<f64>> = (0..n * n)
        .into_par_iter()
        .map(|c| {
            let (r, t) = (c / n, c % n);
            if r == t {
                Ok(cross_validate_with(&parts[r], k, seed, &fit_predict)?.mean_micro_f1)
            } else {
                let pred = fit_predict(&parts[r], &parts[t])?;
                Ok(compute_metrics(&parts[t].labels(), &pred)?.micro_f1)
            }
        })
        .collect();
    let mut matrix = vec![vec![0.0; n]; n];
    for (c, v) in cells.into_iter().enumerate() {
        matrix[c / n][c % n] = v?;
    }
    Ok(CrossDomainMatrix { domains, cells: matrix })
}
