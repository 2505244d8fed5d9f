//! Annotated comparative sentences: data model, ingestion, confidence
//! filtering, stratified holdout splitting and per-domain statistics.
//!
//! The canonical on-disk format is JSON Lines, one object per sentence:
//!
//! ```text
//! {"id": "s1", "text": "Python is better than MATLAB", "object_a": "Python",
//!  "object_b": "MATLAB", "label": "BETTER", "domain": "CompSci",
//!  "confidence": 1.0,
//!  "pos_tags": ["NNP", "VBZ", "JJR", "IN", "NNP"],
//!  "parse": "1\tPython\tpython\tNNP\t3\tnsubj\n..."}
//! ```
//!
//! `confidence` defaults to 1.0 when absent. `pos_tags` (one Penn Treebank tag
//! per token of [`crate::preprocess::tokenize`]) and `parse` (CoNLL-like rows
//! `index form lemma pos head relation`, same tokenization) are optional.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::io::{BufRead, Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::rng;

/// Preference of the first-mentioned item over the second.
///
/// The derived ordering (`None < Better < Worse`) is the canonical order used
/// for every tie-break in the crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Label {
    None,
    Better,
    Worse,
}

impl Label {
    pub const ALL: [Label; 3] = [Label::None, Label::Better, Label::Worse];
    pub const COUNT: usize = 3;

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Label> {
        Self::ALL.get(index).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::None => "NONE",
            Label::Better => "BETTER",
            Label::Worse => "WORSE",
        }
    }

    /// Swaps BETTER and WORSE; NONE is unaffected.
    pub fn inverted(self) -> Label {
        match self {
            Label::None => Label::None,
            Label::Better => Label::Worse,
            Label::Worse => Label::Better,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Label> {
        match s.trim().to_ascii_uppercase().as_str() {
            "NONE" => Ok(Label::None),
            "BETTER" => Ok(Label::Better),
            "WORSE" => Ok(Label::Worse),
            _ => Err(Error::UnknownLabel(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledSentence {
    pub id: String,
    pub text: String,
    pub object_a: String,
    pub object_b: String,
    pub label: Label,
    pub domain: String,
    pub confidence: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pos_tags: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parse: Option<String>,
}

impl LabeledSentence {
    fn validate(&self, index: usize) -> Result<()> {
        let field_err = |field: &str, message: String| Error::Record {
            index,
            field: field.to_string(),
            message,
        };
        if self.object_a.trim().is_empty() {
            return Err(field_err("object_a", "empty".into()));
        }
        if self.object_b.trim().is_empty() {
            return Err(field_err("object_b", "empty".into()));
        }
        if self.object_a.trim().to_lowercase() == self.object_b.trim().to_lowercase() {
            return Err(field_err(
                "object_b",
                format!("identical to object_a (`{}`)", self.object_a),
            ));
        }
        if self.domain.trim().is_empty() {
            return Err(field_err("domain", "empty".into()));
        }
        if !(0.0..=1.0).contains(&self.confidence) {
            return Err(field_err(
                "confidence",
                format!("{} outside [0, 1]", self.confidence),
            ));
        }
        Ok(())
    }
}

/// An immutable, validated collection of sentences.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    sentences: Vec<LabeledSentence>,
    provenance: String,
}

impl Dataset {
    pub fn new(sentences: Vec<LabeledSentence>, provenance: impl Into<String>) -> Result<Dataset> {
        let mut seen = HashSet::with_capacity(sentences.len());
        for (index, s) in sentences.iter().enumerate() {
            s.validate(index)?;
            if !seen.insert(s.id.as_str()) {
                return Err(Error::DuplicateId(s.id.clone()));
            }
        }
        Ok(Dataset {
            sentences,
            provenance: provenance.into(),
        })
    }

    pub fn sentences(&self) -> &[LabeledSentence] {
        &self.sentences
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn labels(&self) -> Vec<Label> {
        self.sentences.iter().map(|s| s.label).collect()
    }

    /// Sentences at `indices`, in the given order. Indices must be in range.
    pub fn subset(&self, indices: &[usize], provenance: impl Into<String>) -> Dataset {
        Dataset {
            sentences: indices.iter().map(|&i| self.sentences[i].clone()).collect(),
            provenance: provenance.into(),
        }
    }

    pub fn filter<F>(&self, mut keep: F, provenance: impl Into<String>) -> Dataset
    where
        F: FnMut(&LabeledSentence) -> bool,
    {
        Dataset {
            sentences: self.sentences.iter().filter(|s| keep(s)).cloned().collect(),
            provenance: provenance.into(),
        }
    }

    /// Distinct domains, sorted.
    pub fn domains(&self) -> Vec<String> {
        let mut d: Vec<String> = self.sentences.iter().map(|s| s.domain.clone()).collect();
        d.sort();
        d.dedup();
        d
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        for s in &self.sentences {
            serde_json::to_writer(&mut out, s)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

/// Maps logical fields onto CSV header names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnMap {
    /// When `None`, ids are generated as `row-<n>` (0-based).
    pub id: Option<String>,
    pub text: String,
    pub object_a: String,
    pub object_b: String,
    pub label: String,
    /// When `None`, every row receives `default_domain`.
    pub domain: Option<String>,
    pub default_domain: String,
    /// When `None` (or the cell is empty), confidence is 1.0.
    pub confidence: Option<String>,
}

impl Default for ColumnMap {
    fn default() -> Self {
        ColumnMap {
            id: Some("id".into()),
            text: "sentence".into(),
            object_a: "object_a".into(),
            object_b: "object_b".into(),
            label: "most_frequent_label".into(),
            domain: Some("domain".into()),
            default_domain: "unknown".into(),
            confidence: Some("confidence".into()),
        }
    }
}

impl ColumnMap {
    /// Applies `field=column` overrides, e.g. `text=sentence`. A column value
    /// of `-` unsets an optional column.
    pub fn with_override(mut self, spec: &str) -> Result<ColumnMap> {
        let (field, column) = spec
            .split_once('=')
            .ok_or_else(|| Error::InvalidArgument(format!("column override `{spec}` lacks `=`")))?;
        let column = column.trim().to_string();
        let optional = if column == "-" { None } else { Some(column.clone()) };
        match field.trim() {
            "id" => self.id = optional,
            "text" => self.text = column,
            "object_a" => self.object_a = column,
            "object_b" => self.object_b = column,
            "label" => self.label = column,
            "domain" => self.domain = optional,
            "default_domain" => self.default_domain = column,
            "confidence" => self.confidence = optional,
            other => {
                return Err(Error::InvalidArgument(format!(
                    "unknown column-map field `{other}`"
                )))
            }
        }
        Ok(self)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InputFormat {
    Jsonl,
    Csv(ColumnMap),
}

pub fn load_dataset<R: Read>(source: R, format: &InputFormat) -> Result<Dataset> {
    match format {
        InputFormat::Jsonl => load_jsonl(std::io::BufReader::new(source)),
        InputFormat::Csv(map) => load_csv(source, map),
    }
}

fn record_err(index: usize, field: &str, message: impl Into<String>) -> Error {
    Error::Record {
        index,
        field: field.to_string(),
        message: message.into(),
    }
}

fn required_str(obj: &serde_json::Map<String, Value>, index: usize, field: &str) -> Result<String> {
    match obj.get(field) {
        Some(Value::String(s)) => Ok(s.clone()),
        Some(Value::Number(n)) if field == "id" => Ok(n.to_string()),
        Some(_) => Err(record_err(index, field, "expected a string")),
        None => Err(record_err(index, field, "missing")),
    }
}

fn load_jsonl<R: BufRead>(reader: R) -> Result<Dataset> {
    let mut sentences = Vec::new();
    for (index, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let value: Value = serde_json::from_str(&line)
            .map_err(|e| record_err(index, "<record>", format!("invalid JSON: {e}")))?;
        let obj = value
            .as_object()
            .ok_or_else(|| record_err(index, "<record>", "expected a JSON object"))?;

        let label_str = required_str(obj, index, "label")?;
        let label = label_str
            .parse::<Label>()
            .map_err(|_| record_err(index, "label", format!("unknown label `{label_str}`")))?;
        let confidence = match obj.get("confidence") {
            None | Some(Value::Null) => 1.0,
            Some(v) => v
                .as_f64()
                .ok_or_else(|| record_err(index, "confidence", "expected a number"))?,
        };
        let pos_tags = match obj.get("pos_tags") {
            None | Some(Value::Null) => None,
            Some(Value::Array(items)) => Some(
                items
                    .iter()
                    .map(|t| {
                        t.as_str()
                            .map(str::to_string)
                            .ok_or_else(|| record_err(index, "pos_tags", "expected strings"))
                    })
                    .collect::<Result<Vec<_>>>()?,
            ),
            Some(_) => return Err(record_err(index, "pos_tags", "expected an array")),
        };
        let parse = match obj.get("parse") {
            None | Some(Value::Null) => None,
            Some(Value::String(s)) => Some(s.clone()),
            Some(Value::Array(rows)) => Some(
                rows.iter()
                    .map(|r| {
                        r.as_str()
                            .map(str::to_string)
                            .ok_or_else(|| record_err(index, "parse", "expected string rows"))
                    })
                    .collect::<Result<Vec<_>>>()?
                    .join("\n"),
            ),
            Some(_) => return Err(record_err(index, "parse", "expected a string")),
        };
        let sentence = LabeledSentence {
            id: required_str(obj, index, "id")?,
            text: required_str(obj, index, "text")?,
            object_a: required_str(obj, index, "object_a")?,
            object_b: required_str(obj, index, "object_b")?,
            label,
            domain: required_str(obj, index, "domain")?,
            confidence,
            pos_tags,
            parse,
        };
        sentence.validate(index)?;
        sentences.push(sentence);
    }
    Dataset::new(sentences, "jsonl")
}

fn load_csv<R: Read>(source: R, map: &ColumnMap) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new().flexible(false).from_reader(source);
    let headers = reader.headers()?.clone();
    let column = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| record_err(0, name, "column missing from CSV header"))
    };
    let id_col = map.id.as_deref().map(column).transpose()?;
    let text_col = column(&map.text)?;
    let a_col = column(&map.object_a)?;
    let b_col = column(&map.object_b)?;
    let label_col = column(&map.label)?;
    let domain_col = map.domain.as_deref().map(column).transpose()?;
    let conf_col = map.confidence.as_deref().map(column).transpose()?;

    let mut sentences = Vec::new();
    for (index, row) in reader.records().enumerate() {
        let row = row.map_err(|e| record_err(index, "<record>", e.to_string()))?;
        let cell = |col: usize, field: &str| -> Result<String> {
            row.get(col)
                .map(|c| c.trim().to_string())
                .ok_or_else(|| record_err(index, field, "missing cell"))
        };
        let label_str = cell(label_col, "label")?;
        let label = label_str
            .parse::<Label>()
            .map_err(|_| record_err(index, "label", format!("unknown label `{label_str}`")))?;
        let confidence = match conf_col {
            Some(c) => {
                let raw = cell(c, "confidence")?;
                if raw.is_empty() {
                    1.0
                } else {
                    raw.parse::<f64>().map_err(|_| {
                        record_err(index, "confidence", format!("not a number: `{raw}`"))
                    })?
                }
            }
            None => 1.0,
        };
        let sentence = LabeledSentence {
            id: match id_col {
                Some(c) => cell(c, "id")?,
                None => format!("row-{index}"),
            },
            text: cell(text_col, "text")?,
            object_a: cell(a_col, "object_a")?,
            object_b: cell(b_col, "object_b")?,
            label,
            domain: match domain_col {
                Some(c) => cell(c, "domain")?,
                None => map.default_domain.clone(),
            },
            confidence,
            pos_tags: None,
            parse: None,
        };
        sentence.validate(index)?;
        sentences.push(sentence);
    }
    Dataset::new(sentences, "csv")
}

/// Keeps sentences whose confidence is at least `min_conf`, in order.
pub fn filter_by_confidence(ds: &Dataset, min_conf: f64) -> Result<Dataset> {
    if !(0.0..=1.0).contains(&min_conf) {
        return Err(Error::InvalidArgument(format!(
            "min_conf {min_conf} outside [0, 1]"
        )));
    }
    Ok(ds.filter(
        |s| s.confidence >= min_conf,
        format!("{} | confidence >= {min_conf}", ds.provenance()),
    ))
}

/// Indices of `ds` grouped by label, each group in dataset order.
pub(crate) fn label_strata(labels: &[Label]) -> [Vec<usize>; Label::COUNT] {
    let mut strata: [Vec<usize>; Label::COUNT] = Default::default();
    for (i, l) in labels.iter().enumerate() {
        strata[l.index()].push(i);
    }
    strata
}

/// Splits `ds` so that every label contributes `round(train_fraction * n)`
/// of its `n` sentences to the training side.
///
/// Each label stratum is shuffled with [`rng::seeded`] and the first share is
/// taken. Both halves keep the original dataset order.
pub fn stratified_holdout_split(
    ds: &Dataset,
    train_fraction: f64,
    seed: u64,
) -> Result<(Dataset, Dataset)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "train_fraction {train_fraction} outside (0, 1)"
        )));
    }
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut rng = rng::seeded(seed);
    let mut in_train = vec![false; ds.len()];
    for mut stratum in label_strata(&ds.labels()) {
        rng::shuffle(&mut stratum, &mut rng);
        let take = (train_fraction * stratum.len() as f64).round() as usize;
        for &i in &stratum[..take] {
            in_train[i] = true;
        }
    }
    let (train, test): (Vec<usize>, Vec<usize>) = (0..ds.len()).partition(|&i| in_train[i]);
    Ok((
        ds.subset(&train, format!("{} | train {train_fraction} seed {seed}", ds.provenance())),
        ds.subset(&test, format!("{} | test {train_fraction} seed {seed}", ds.provenance())),
    ))
}

/// Label counts per domain.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatsReport {
    /// Domain → counts indexed by [`Label::index`].
    pub per_domain: BTreeMap<String, [usize; Label::COUNT]>,
    pub totals: [usize; Label::COUNT],
}

impl StatsReport {
    pub fn total(&self) -> usize {
        self.totals.iter().sum()
    }

    pub fn domain_total(&self, domain: &str) -> usize {
        self.per_domain.get(domain).map_or(0, |c| c.iter().sum())
    }

    pub fn count(&self, domain: &str, label: Label) -> usize {
        self.per_domain.get(domain).map_or(0, |c| c[label.index()])
    }

    /// Column order follows the published table: BETTER, WORSE, NONE, Total.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("domain,BETTER,WORSE,NONE,total\n");
        let row = |name: &str, c: &[usize; 3]| {
            format!(
                "{name},{},{},{},{}\n",
                c[Label::Better.index()],
                c[Label::Worse.index()],
                c[Label::None.index()],
                c.iter().sum::<usize>()
            )
        };
        for (domain, counts) in &self.per_domain {
            out.push_str(&row(domain, counts));
        }
        out.push_str(&row("Total", &self.totals));
        out
    }

    pub fn to_markdown(&self) -> String {
        let mut rows = vec![vec![
            "Domain".to_string(),
            "BETTER".into(),
            "WORSE".into(),
            "NONE".into(),
            "Total".into(),
        ]];
        let row = |name: &str, c: &[usize; 3]| {
            vec![
                name.to_string(),
                c[Label::Better.index()].to_string(),
                c[Label::Worse.index()].to_string(),
                c[Label::None.index()].to_string(),
                c.iter().sum::<usize>().to_string(),
            ]
        };
        for (domain, counts) in &self.per_domain {
            rows.push(row(domain, counts));
        }
        rows.push(row("Total", &self.totals));
        crate::render::markdown_table(&rows)
    }
}

pub fn dataset_stats(ds: &Dataset) -> StatsReport {
    let mut report = StatsReport::default();
    for s in ds.sentences() {
        report.per_domain.entry(s.domain.clone()).or_default()[s.label.index()] += 1;
        report.totals[s.label.index()] += 1;
    }
    report
}
