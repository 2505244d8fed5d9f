use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::render::{fmt4, markdown_table};

/// Gold rows × predicted columns, canonical label order.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[usize; Label::COUNT]; Label::COUNT],
}

impl ConfusionMatrix {
    pub fn from_pairs(gold: &[Label], pred: &[Label]) -> ConfusionMatrix {
        let mut m = ConfusionMatrix::default();
        for (g, p) in gold.iter().zip(pred) {
            m.counts[g.index()][p.index()] += 1;
        }
        m
    }

    pub fn get(&self, gold: Label, pred: Label) -> usize {
        self.counts[gold.index()][pred.index()]
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn correct(&self) -> usize {
        (0..Label::COUNT).map(|k| self.counts[k][k]).sum()
    }

    pub fn to_markdown(&self) -> String {
        let mut rows = vec![std::iter::once("gold \\ predicted".to_string())
            .chain(Label::ALL.iter().map(|l| l.to_string()))
            .collect::<Vec<_>>()];
        for g in Label::ALL {
            rows.push(
                std::iter::once(g.to_string())
                    .chain(Label::ALL.iter().map(|&p| self.get(g, p).to_string()))
                    .collect(),
            );
        }
        markdown_table(&rows)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Gold instances of the class.
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// Indexed by [`Label::index`].
    pub per_class: [ClassMetrics; Label::COUNT],
    pub micro_f1: f64,
    pub accuracy: f64,
    pub confusion: ConfusionMatrix,
    /// Metrics that hit a zero denominator and were set to 0.
    pub flags: Vec<String>,
    pub per_domain: BTreeMap<String, EvalReport>,
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

impl EvalReport {
    pub fn from_confusion(confusion: ConfusionMatrix) -> EvalReport {
        let mut per_class = [ClassMetrics::default(); Label::COUNT];
        let mut flags = Vec::new();
        for l in Label::ALL {
            let k = l.index();
            let tp = confusion.counts[k][k];
            let predicted: usize = (0..Label::COUNT).map(|g| confusion.counts[g][k]).sum();
            let support: usize = confusion.counts[k].iter().sum();
            let precision = ratio(tp, predicted).unwrap_or_else(|| {
                flags.push(format!("precision({l}): no predictions"));
                0.0
            });
            let recall = ratio(tp, support).unwrap_or_else(|| {
                flags.push(format!("recall({l}): no gold instances"));
                0.0
            });
            let f1 = if precision + recall > 0.0 {
                2.0 * precision * recall / (precision + recall)
            } else {
                flags.push(format!("f1({l}): precision and recall are 0"));
                0.0
            };
            per_class[k] = ClassMetrics {
                precision,
                recall,
                f1,
                support,
            };
        }
        let tp = confusion.correct();
        let errors = confusion.total() - tp;
        // pooled FP and FN both equal the error count
        let micro_f1 = ratio(2 * tp, 2 * tp + 2 * errors).unwrap_or(0.0);
        let accuracy = ratio(tp, confusion.total()).unwrap_or(0.0);
        EvalReport {
            per_class,
            micro_f1,
            accuracy,
            confusion,
            flags,
            per_domain: BTreeMap::new(),
        }
    }

    pub fn class(&self, label: Label) -> &ClassMetrics {
        &self.per_class[label.index()]
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("scope,label,precision,recall,f1,support\n");
        let mut emit = |scope: &str, r: &EvalReport| {
            for l in Label::ALL {
                let m = r.class(l);
                out.push_str(&format!(
                    "{scope},{l},{},{},{},{}\n",
                    fmt4(m.precision),
                    fmt4(m.recall),
                    fmt4(m.f1),
                    m.support
                ));
            }
            out.push_str(&format!(
                "{scope},micro,{0},{0},{0},{1}\n",
                fmt4(r.micro_f1),
                r.confusion.total()
            ));
        };
        emit("all", self);
        for (d, r) in &self.per_domain {
            emit(&crate::render::csv_cell(d), r);
        }
        out
    }

    pub fn to_markdown(&self) -> String {
        let mut rows = vec![vec![
            "scope".to_string(),
            "label".into(),
            "precision".into(),
            "recall".into(),
            "F1".into(),
            "support".into(),
        ]];
        let mut emit = |scope: &str, r: &EvalReport| {
            for l in Label::ALL {
                let m = r.class(l);
                rows.push(vec![
                    scope.to_string(),
                    l.to_string(),
                    fmt4(m.precision),
                    fmt4(m.recall),
                    fmt4(m.f1),
                    m.support.to_string(),
                ]);
            }
            rows.push(vec![
                scope.to_string(),
                "micro".into(),
                fmt4(r.micro_f1),
                fmt4(r.micro_f1),
                fmt4(r.micro_f1),
                r.confusion.total().to_string(),
            ]);
        };
        emit("all", self);
        for (d, r) in &self.per_domain {
            emit(d, r);
        }
        let mut out = markdown_table(&rows);
        out.push('\n');
        out.push_str(&self.confusion.to_markdown());
        if !self.flags.is_empty() {
            out.push('\n');
            for f in &self.flags {
                out.push_str(&format!("- {f}\n"));
            }
        }
        out
    }
}

pub fn compute_metrics(gold: &[Label], pred: &[Label]) -> Result<EvalReport> {
    if gold.len() != pred.len() {
        return Err(Error::InvalidArgument(format!(
            "{} gold labels but {} predictions",
            gold.len(),
            pred.len()
        )));
    }
    if gold.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(EvalReport::from_confusion(ConfusionMatrix::from_pairs(gold, pred)))
}

/// [`compute_metrics`] plus one sub-report per domain.
pub fn compute_metrics_by_domain(gold: &[Label], pred: &[Label], domains: &[&str]) -> Result<EvalReport> {
    let mut report = compute_metrics(gold, pred)?;
    if domains.len() != gold.len() {
        return Err(Error::InvalidArgument("domain list length differs from labels".into()));
    }
    let mut groups: BTreeMap<&str, (Vec<Label>, Vec<Label>)> = BTreeMap::new();
    for ((g, p), d) in gold.iter().zip(pred).zip(domains) {
        let e = groups.entry(d).or_default();
        e.0.push(*g);
        e.1.push(*p);
    }
    for (d, (g, p)) in groups {
        report.per_domain.insert(d.to_string(), compute_metrics(&g, &p)?);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use Label::{Better as B, None as N, Worse as W};

    #[test]
    fn perfect() {
        let y = [N, B, W, N];
        let r = compute_metrics(&y, &y).unwrap();
        assert_eq!(r.micro_f1, 1.0);
        assert!(r.per_class.iter().all(|m| m.f1 == 1.0));
        assert!(r.flags.is_empty());
    }

    #[test]
    fn hand_example() {
        let r = compute_metrics(&[N, N, B], &[N, B, B]).unwrap();
        assert_eq!(r.class(B).precision, 0.5);
        assert_eq!(r.class(B).recall, 1.0);
        assert!((r.class(B).f1 - 2.0 / 3.0).abs() < 1e-12);
        assert!((r.micro_f1 - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(r.micro_f1, r.accuracy);
        // no W anywhere
        assert_eq!(r.class(W).f1, 0.0);
        assert!(r.flags.iter().any(|f| f.contains("WORSE")));
    }

    #[test]
    fn length_mismatch() {
        assert!(compute_metrics(&[N], &[N, B]).is_err());
        assert!(compute_metrics(&[], &[]).is_err());
    }

    #[test]
    fn per_domain_and_rendering() {
        let r = compute_metrics_by_domain(&[N, B, W], &[N, B, N], &["x", "y", "x"]).unwrap();
        assert_eq!(r.per_domain.len(), 2);
        assert_eq!(r.per_domain["y"].micro_f1, 1.0);
        assert_eq!(r.per_domain["x"].micro_f1, 0.5);
        let csv = r.to_csv();
        assert!(csv.starts_with("scope,label,precision,recall,f1,support\n"));
        assert!(csv.contains("all,micro,0.6667,0.6667,0.6667,3\n"));
        assert!(r.to_markdown().contains("| gold \\ predicted |"));
    }
}
