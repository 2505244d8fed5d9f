use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::corpus::{Dataset, Label};
use crate::error::{Error, Result};
use crate::render::{csv_cell, fmt4, markdown_table};

/// Annotation confidence bins: below 0.8, [0.8, 1), exactly 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ConfidenceBin {
    Low,
    High,
    Unanimous,
}

impl ConfidenceBin {
    pub fn of(confidence: f64) -> ConfidenceBin {
        if confidence >= 1.0 {
            ConfidenceBin::Unanimous
        } else if confidence >= 0.8 {
            ConfidenceBin::High
        } else {
            ConfidenceBin::Low
        }
    }
}

impl fmt::Display for ConfidenceBin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ConfidenceBin::Low => "<0.8",
            ConfidenceBin::High => "[0.8,1)",
            ConfidenceBin::Unanimous => "1.0",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorEntry {
    pub id: String,
    pub text: String,
    pub gold: Label,
    pub predicted: Label,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    /// Misclassified sentences in dataset order.
    pub entries: Vec<ErrorEntry>,
    /// Error counts by (gold, predicted, confidence bin).
    pub groups: BTreeMap<(Label, Label, ConfidenceBin), usize>,
}

impl ErrorReport {
    pub fn total(&self) -> usize {
        self.entries.len()
    }

    pub fn groups_csv(&self) -> String {
        let mut out = String::from("gold,predicted,confidence_bin,count\n");
        for ((g, p, b), n) in &self.groups {
            out.push_str(&format!("{g},{p},{},{n}\n", csv_cell(&b.to_string())));
        }
        out
    }

    /// One row per error: sentence, predicted, gold, confidence.
    pub fn entries_csv(&self) -> String {
        let mut out = String::from("id,sentence,predicted,gold,confidence\n");
        for e in &self.entries {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                csv_cell(&e.id),
                csv_cell(&e.text),
                e.predicted,
                e.gold,
                fmt4(e.confidence)
            ));
        }
        out
    }

    pub fn to_markdown(&self) -> String {
        let mut rows = vec![vec![
            "gold".to_string(),
            "predicted".into(),
            "confidence".into(),
            "count".into(),
        ]];
        for ((g, p, b), n) in &self.groups {
            rows.push(vec![g.to_string(), p.to_string(), b.to_string(), n.to_string()]);
        }
        let mut out = markdown_table(&rows);
        out.push('\n');
        let mut detail = vec![vec![
            "sentence".to_string(),
            "predicted".into(),
            "gold".into(),
            "confidence".into(),
        ]];
        for e in &self.entries {
            detail.push(vec![
                e.text.replace('|', "\\|"),
                e.predicted.to_string(),
                e.gold.to_string(),
                fmt4(e.confidence),
            ]);
        }
        out.push_str(&markdown_table(&detail));
        out
    }
}

pub fn error_report(ds: &Dataset, pred: &[Label]) -> Result<ErrorReport> {
    if pred.len() != ds.len() {
        return Err(Error::InvalidArgument(format!(
            "{} predictions for {} sentences",
            pred.len(),
            ds.len()
        )));
    }
    let mut entries = Vec::new();
    let mut groups = BTreeMap::new();
    for (s, &p) in ds.sentences().iter().zip(pred) {
        if s.label == p {
            continue;
        }
        *groups
            .entry((s.label, p, ConfidenceBin::of(s.confidence)))
            .or_insert(0) += 1;
        entries.push(ErrorEntry {
            id: s.id.clone(),
            text: s.text.clone(),
            gold: s.label,
            predicted: p,
            confidence: s.confidence,
        });
    }
    Ok(ErrorReport { entries, groups })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::LabeledSentence;

    fn ds(conf: &[f64]) -> Dataset {
        let s = conf
            .iter()
            .enumerate()
            .map(|(i, &c)| LabeledSentence {
                id: format!("s{i}"),
                text: format!("a vs b, {i}"),
                object_a: "a".into(),
                object_b: "b".into(),
                label: Label::Better,
                domain: "d".into(),
                confidence: c,
                pos_tags: None,
                parse: None,
            })
            .collect();
        Dataset::new(s, "t").unwrap()
    }

    #[test]
    fn bins() {
        assert_eq!(ConfidenceBin::of(0.6), ConfidenceBin::Low);
        assert_eq!(ConfidenceBin::of(0.8), ConfidenceBin::High);
        assert_eq!(ConfidenceBin::of(0.99), ConfidenceBin::High);
        assert_eq!(ConfidenceBin::of(1.0), ConfidenceBin::Unanimous);
    }

    #[test]
    fn perfect_and_single_error() {
        let d = ds(&[1.0, 0.6]);
        assert_eq!(error_report(&d, &[Label::Better, Label::Better]).unwrap().total(), 0);
        let r = error_report(&d, &[Label::Worse, Label::Better]).unwrap();
        assert_eq!(r.groups.len(), 1);
        assert_eq!(r.groups[&(Label::Better, Label::Worse, ConfidenceBin::Unanimous)], 1);
        assert_eq!(r.groups.values().sum::<usize>(), r.total());
        assert!(r.entries_csv().contains("\"a vs b, 0\",WORSE,BETTER,1.0000"));
        assert!(r.groups_csv().contains("BETTER,WORSE,1.0,1"));
        assert!(error_report(&d, &[Label::Worse]).is_err());
    }
}
