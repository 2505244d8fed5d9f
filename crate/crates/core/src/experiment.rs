//! Declarative experiment configuration and the runner behind the CLI.
//!
//! Configuration is TOML. Every key is optional; unknown keys are errors.
//!
//! ```toml
//! seed = 0
//! output_dir = "out"
//!
//! [data]
//! path = "compsent19.jsonl"   # relative paths resolve against the config file
//! format = "jsonl"            # or "csv"
//! columns = ["label=most_frequent_label"]   # csv column overrides
//! min_confidence = 0.0
//!
//! [pipeline]
//! scope = "middle"            # full | beginning+middle+ending subsets
//! replacement = "keep"        # keep | remove | oblivious | distinct
//! features = ["bow"]          # bow ngrams pos-ngrams jjr avg-embedding dep-path
//! weighting = "binary"        # binary | tf | tfidf
//! ngram_range = [1, 3]
//! min_df = 1
//! pos_capacity = 500
//! path_mode = "customized"    # original | customized
//! hash_dimension = 4096
//! model = "gbdt"              # gbdt | logreg | naive-bayes | majority
//! embeddings = "glove.txt"
//!
//! [model]
//! estimators = 1000
//! shrinkage = 0.1
//! max_depth = 6
//! min_child_weight = 1.0
//! lambda = 1.0
//! l2 = 0.0001
//! iterations = 200
//! alpha = 1.0
//!
//! [eval]
//! mode = "cv"                 # holdout | cv | cross-domain | baseline
//! folds = 5
//! train_fraction = 0.8
//! domains = []
//! lexicon = "cues.txt"        # default: the shipped lexicon
//! baseline_split = "holdout"  # holdout | full
//! chart = false
//! save_model = true
//! ```

use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::corpus::{filter_by_confidence, load_dataset, stratified_holdout_split, ColumnMap, Dataset, InputFormat};
use crate::error::{Error, Result};
use crate::eval::{
    compute_metrics_by_domain, cross_domain_with, cross_validate_with, error_report, svg_bar_chart, ErrorReport,
    EvalReport,
};
use crate::features::{load_embeddings, PathMode, Weighting};
use crate::models::{ModelKind, ModelParams, TrainConfig};
use crate::pipeline::{
    fit_pipeline, pipeline_fit_predict, rule_predict_dataset, serialize_pipeline, usable_sentences, FeatureKind,
    PipelineSpec, Resources,
};
use crate::preprocess::{ReplacementStrategy, Scope};
use crate::rules::{load_cue_lexicon, CueLexicon};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvalMode {
    Holdout,
    Cv,
    CrossDomain,
    Baseline,
}

impl FromStr for EvalMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "holdout" => Ok(EvalMode::Holdout),
            "cv" => Ok(EvalMode::Cv),
            "cross-domain" | "cross_domain" => Ok(EvalMode::CrossDomain),
            "baseline" => Ok(EvalMode::Baseline),
            other => Err(Error::InvalidArgument(format!("unknown mode `{other}`"))),
        }
    }
}

impl fmt::Display for EvalMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EvalMode::Holdout => "holdout",
            EvalMode::Cv => "cv",
            EvalMode::CrossDomain => "cross-domain",
            EvalMode::Baseline => "baseline",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DataFormat {
    Jsonl,
    Csv(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub data_path: PathBuf,
    pub data_format: DataFormat,
    pub min_confidence: Option<f64>,
    pub pipeline: PipelineSpec,
    pub embeddings: Option<PathBuf>,
    pub mode: EvalMode,
    pub folds: usize,
    pub train_fraction: f64,
    pub domains: Vec<String>,
    pub lexicon: Option<PathBuf>,
    /// Baseline mode scores the held-out split, or the whole dataset when false.
    pub baseline_on_holdout: bool,
    pub chart: bool,
    pub save_model: bool,
    pub seed: u64,
    pub output_dir: PathBuf,
}

const KNOWN_KEYS: &[&str] = &[
    "seed",
    "output_dir",
    "data.path",
    "data.format",
    "data.columns",
    "data.min_confidence",
    "pipeline.scope",
    "pipeline.replacement",
    "pipeline.features",
    "pipeline.weighting",
    "pipeline.ngram_range",
    "pipeline.min_df",
    "pipeline.pos_capacity",
    "pipeline.path_mode",
    "pipeline.hash_dimension",
    "pipeline.model",
    "pipeline.embeddings",
    "model.estimators",
    "model.shrinkage",
    "model.max_depth",
    "model.min_child_weight",
    "model.lambda",
    "model.l2",
    "model.iterations",
    "model.alpha",
    "eval.mode",
    "eval.folds",
    "eval.train_fraction",
    "eval.domains",
    "eval.lexicon",
    "eval.baseline_split",
    "eval.chart",
    "eval.save_model",
];

fn flatten(prefix: &str, table: &toml::Table, out: &mut Vec<(String, toml::Value)>) {
    for (k, v) in table {
        let key = if prefix.is_empty() {
            k.clone()
        } else {
            format!("{prefix}.{k}")
        };
        match v {
            toml::Value::Table(t) => flatten(&key, t, out),
            other => out.push((key, other.clone())),
        }
    }
}

/// Sets `dotted.key` to `raw`, read as a TOML value when it parses as one and
/// as a plain string otherwise.
pub fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Config(vec![format!("override `{assignment}` is not key=value")]))?;
    let key = key.trim();
    let value = toml::from_str::<toml::Table>(&format!("v = {}", raw.trim()))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.trim().to_string()));
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts.pop().filter(|l| !l.is_empty()).ok_or_else(|| Error::Config(vec![format!("empty key in `{assignment}`")]))?;
    let mut cur = table;
    for p in parts {
        let entry = cur
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| Error::Config(vec![format!("`{p}` in `{key}` is not a table")]))?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}

struct Fields {
    values: Vec<(String, toml::Value)>,
    errors: Vec<String>,
}

impl Fields {
    fn raw(&self, key: &str) -> Option<&toml::Value> {
        self.values.iter().find(|(k, _)| k == key).map(|(_, v)| v)
    }

    fn string(&mut self, key: &str) -> Option<String> {
        match self.raw(key)? {
            toml::Value::String(s) => Some(s.clone()),
            other => {
                self.errors.push(format!("{key}: expected a string, got {other}"));
                None
            }
        }
    }

    fn parsed<T: FromStr<Err = Error>>(&mut self, key: &str, default: T) -> T {
        match self.string(key) {
            None => default,
            Some(s) => match s.parse() {
                Ok(v) => v,
                Err(e) => {
                    self.errors.push(format!("{key}: {}", strip_prefix(&e)));
                    default
                }
            },
        }
    }

    fn integer(&mut self, key: &str, default: usize) -> usize {
        match self.raw(key) {
            None => default,
            Some(toml::Value::Integer(i)) if *i >= 0 => *i as usize,
            Some(other) => {
                self.errors.push(format!("{key}: expected a nonnegative integer, got {other}"));
                default
            }
        }
    }

    fn float(&mut self, key: &str, default: f64) -> f64 {
        match self.raw(key) {
            None => default,
            Some(toml::Value::Float(f)) => *f,
            Some(toml::Value::Integer(i)) => *i as f64,
            Some(other) => {
                self.errors.push(format!("{key}: expected a number, got {other}"));
                default
            }
        }
    }

    fn boolean(&mut self, key: &str, default: bool) -> bool {
        match self.raw(key) {
            None => default,
            Some(toml::Value::Boolean(b)) => *b,
            Some(other) => {
                self.errors.push(format!("{key}: expected true or false, got {other}"));
                default
            }
        }
    }

    fn strings(&mut self, key: &str) -> Option<Vec<String>> {
        match self.raw(key)? {
            toml::Value::Array(items) => {
                let mut out = Vec::new();
                for item in items {
                    match item {
                        toml::Value::String(s) => out.push(s.clone()),
                        other => {
                            self.errors.push(format!("{key}: expected strings, got {other}"));
                            return None;
                        }
                    }
                }
                Some(out)
            }
            toml::Value::String(s) => Some(s.split(',').map(|p| p.trim().to_string()).filter(|p| !p.is_empty()).collect()),
            other => {
                self.errors.push(format!("{key}: expected a list of strings, got {other}"));
                None
            }
        }
    }
}

fn strip_prefix(e: &Error) -> String {
    match e {
        Error::InvalidArgument(m) => m.clone(),
        other => other.to_string(),
    }
}

impl ExperimentConfig {
    /// Reads a config file and applies `key=value` overrides on top.
    pub fn load(path: &Path, overrides: &[String]) -> Result<ExperimentConfig> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(vec![format!("cannot read {}: {e}", path.display())]))?;
        let base = path.parent().unwrap_or(Path::new("."));
        ExperimentConfig::from_toml(&text, overrides, base)
    }

    pub fn from_toml(text: &str, overrides: &[String], base_dir: &Path) -> Result<ExperimentConfig> {
        let mut table: toml::Table =
            toml::from_str(text).map_err(|e| Error::Config(vec![format!("TOML: {}", e.to_string().trim())]))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let mut values = Vec::new();
        flatten("", &table, &mut values);
        let mut f = Fields {
            values,
            errors: Vec::new(),
        };
        for (k, _) in &f.values {
            if !KNOWN_KEYS.contains(&k.as_str()) {
                f.errors.push(format!("{k}: unknown key"));
            }
        }
        let resolve = |p: String| -> PathBuf {
            let p = PathBuf::from(p);
            if p.is_absolute() {
                p
            } else {
                base_dir.join(p)
            }
        };

        let seed = f.integer("seed", 0) as u64;
        let output_dir = resolve(f.string("output_dir").unwrap_or_else(|| "out".into()));
        let data_path = f.string("data.path").map(resolve);
        if data_path.is_none() {
            f.errors.push("data.path: required".into());
        }
        let columns = f.strings("data.columns").unwrap_or_default();
        let data_format = match f.string("data.format").as_deref().map(str::to_ascii_lowercase).as_deref() {
            None | Some("jsonl") => DataFormat::Jsonl,
            Some("csv") => DataFormat::Csv(columns.clone()),
            Some(other) => {
                f.errors.push(format!("data.format: unknown format `{other}` (jsonl or csv)"));
                DataFormat::Jsonl
            }
        };
        if let DataFormat::Csv(cols) = &data_format {
            let mut map = ColumnMap::default();
            for c in cols {
                match map.clone().with_override(c) {
                    Ok(m) => map = m,
                    Err(e) => f.errors.push(format!("data.columns: {}", strip_prefix(&e))),
                }
            }
        }
        let min_confidence = f.raw("data.min_confidence").is_some().then(|| f.float("data.min_confidence", 0.0));
        if let Some(c) = min_confidence {
            if !(0.0..=1.0).contains(&c) {
                f.errors.push(format!("data.min_confidence: {c} outside [0, 1]"));
            }
        }

        let defaults = PipelineSpec::default();
        let scope: Scope = f.parsed("pipeline.scope", defaults.scope);
        let replacement: ReplacementStrategy = f.parsed("pipeline.replacement", defaults.replacement);
        let weighting: Weighting = f.parsed("pipeline.weighting", defaults.weighting);
        let path_mode: PathMode = f.parsed("pipeline.path_mode", defaults.path_mode);
        let model: ModelKind = f.parsed("pipeline.model", defaults.model);
        let mut features = Vec::new();
        for name in f.strings("pipeline.features").unwrap_or_else(|| vec!["bow".into()]) {
            match name.parse::<FeatureKind>() {
                Ok(k) => features.push(k),
                Err(e) => f.errors.push(format!("pipeline.features: {}", strip_prefix(&e))),
            }
        }
        if features.is_empty() && model != ModelKind::Majority {
            f.errors.push("pipeline.features: a learned model needs at least one feature".into());
        }
        let ngram_range = match f.raw("pipeline.ngram_range").cloned() {
            None => defaults.ngram_range,
            Some(toml::Value::Array(a)) if a.len() == 2 => match (a[0].as_integer(), a[1].as_integer()) {
                (Some(lo), Some(hi)) if 1 <= lo && lo <= hi => (lo as usize, hi as usize),
                _ => {
                    f.errors.push("pipeline.ngram_range: need [lo, hi] with 1 <= lo <= hi".into());
                    defaults.ngram_range
                }
            },
            Some(_) => {
                f.errors.push("pipeline.ngram_range: need [lo, hi] with 1 <= lo <= hi".into());
                defaults.ngram_range
            }
        };
        let min_df = f.integer("pipeline.min_df", defaults.min_df);
        let pos_capacity = f.integer("pipeline.pos_capacity", defaults.pos_capacity);
        let hash_dimension = f.integer("pipeline.hash_dimension", defaults.hash_dimension);
        if hash_dimension < 2 {
            f.errors.push("pipeline.hash_dimension: must be at least 2".into());
        }
        let embeddings = f.string("pipeline.embeddings").map(resolve);
        if features.contains(&FeatureKind::AvgEmbedding) && embeddings.is_none() {
            f.errors.push("pipeline.embeddings: required by the avg-embedding feature".into());
        }

        let dm = ModelParams::default();
        let gbdt = TrainConfig {
            estimators: f.integer("model.estimators", dm.gbdt.estimators),
            shrinkage: f.float("model.shrinkage", dm.gbdt.shrinkage),
            max_depth: f.integer("model.max_depth", dm.gbdt.max_depth),
            min_child_weight: f.float("model.min_child_weight", dm.gbdt.min_child_weight),
            lambda: f.float("model.lambda", dm.gbdt.lambda),
            seed,
        };
        if let Err(e) = gbdt.validate() {
            for part in strip_prefix(&e).split("; ") {
                f.errors.push(format!("model: {part}"));
            }
        }
        let params = ModelParams {
            gbdt,
            l2: f.float("model.l2", dm.l2),
            iterations: f.integer("model.iterations", dm.iterations),
            alpha: f.float("model.alpha", dm.alpha),
        };
        if !(params.l2 >= 0.0) {
            f.errors.push("model.l2: must be nonnegative".into());
        }
        if !(params.alpha > 0.0) {
            f.errors.push("model.alpha: must be positive".into());
        }

        let mode: EvalMode = f.parsed("eval.mode", EvalMode::Cv);
        let folds = f.integer("eval.folds", 5);
        if folds < 2 {
            f.errors.push("eval.folds: need at least 2".into());
        }
        let train_fraction = f.float("eval.train_fraction", 0.8);
        if !(train_fraction > 0.0 && train_fraction < 1.0) {
            f.errors.push(format!("eval.train_fraction: {train_fraction} outside (0, 1)"));
        }
        let domains = f.strings("eval.domains").unwrap_or_default();
        let lexicon = f.string("eval.lexicon").map(resolve);
        let baseline_on_holdout = match f.string("eval.baseline_split").as_deref() {
            None | Some("holdout") => true,
            Some("full") => false,
            Some(other) => {
                f.errors.push(format!("eval.baseline_split: `{other}` is not holdout or full"));
                true
            }
        };
        let chart = f.boolean("eval.chart", false);
        let save_model = f.boolean("eval.save_model", true);

        if f.errors.is_empty() {
            Ok(ExperimentConfig {
                data_path: data_path.expect("checked above"),
                data_format,
                min_confidence,
                pipeline: PipelineSpec {
                    scope,
                    replacement,
                    features,
                    weighting,
                    ngram_range,
                    min_df,
                    pos_capacity,
                    path_mode,
                    hash_dimension,
                    model,
                    params,
                },
                embeddings,
                mode,
                folds,
                train_fraction,
                domains,
                lexicon,
                baseline_on_holdout,
                chart,
                save_model,
                seed,
                output_dir,
            })
        } else {
            Err(Error::Config(f.errors))
        }
    }

    /// Run-time checks that referenced files exist; reports every problem.
    pub fn check_files(&self) -> Result<()> {
        let mut errors = Vec::new();
        let mut need = |key: &str, p: &Option<PathBuf>| {
            if let Some(p) = p {
                if !p.is_file() {
                    errors.push(format!("{key}: file {} does not exist", p.display()));
                }
            }
        };
        need("data.path", &Some(self.data_path.clone()));
        need("pipeline.embeddings", &self.embeddings);
        need("eval.lexicon", &self.lexicon);
        if errors.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errors))
        }
    }

    pub fn input_format(&self) -> Result<InputFormat> {
        Ok(match &self.data_format {
            DataFormat::Jsonl => InputFormat::Jsonl,
            DataFormat::Csv(cols) => {
                let mut map = ColumnMap::default();
                for c in cols {
                    map = map.with_override(c)?;
                }
                InputFormat::Csv(map)
            }
        })
    }

    pub fn load_data(&self) -> Result<Dataset> {
        let file = fs::File::open(&self.data_path)?;
        let ds = load_dataset(std::io::BufReader::new(file), &self.input_format()?)?;
        match self.min_confidence {
            Some(c) => filter_by_confidence(&ds, c),
            None => Ok(ds),
        }
    }

    pub fn resources(&self) -> Result<Resources> {
        let embeddings = match &self.embeddings {
            Some(p) => Some(Arc::new(load_embeddings(std::io::BufReader::new(fs::File::open(p)?))?)),
            None => None,
        };
        Ok(Resources { embeddings })
    }

    pub fn lexicon(&self) -> Result<CueLexicon> {
        match &self.lexicon {
            Some(p) => load_cue_lexicon(fs::File::open(p)?),
            None => Ok(CueLexicon::default_lexicon()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutcome {
    /// Files written, relative to the output directory, sorted.
    pub files: BTreeSet<String>,
    pub micro_f1: f64,
    pub summary: String,
}

struct Writer<'a> {
    dir: &'a Path,
    files: BTreeSet<String>,
}

impl Writer<'_> {
    fn put(&mut self, name: &str, contents: impl AsRef<[u8]>) -> Result<()> {
        fs::write(self.dir.join(name), contents)?;
        self.files.insert(name.to_string());
        Ok(())
    }

    fn report(&mut self, r: &EvalReport) -> Result<()> {
        self.put("report.csv", r.to_csv())?;
        self.put("report.md", r.to_markdown())
    }

    fn errors(&mut self, e: &ErrorReport) -> Result<()> {
        self.put("errors.csv", e.entries_csv())?;
        self.put("error_groups.csv", e.groups_csv())?;
        self.put("errors.md", e.to_markdown())
    }
}

fn domains_of(ds: &Dataset) -> Vec<&str> {
    ds.sentences().iter().map(|s| s.domain.as_str()).collect()
}

/// Runs the configured experiment and writes its reports.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    cfg.check_files()?;
    let all = cfg.load_data()?;
    let res = cfg.resources()?;
    fs::create_dir_all(&cfg.output_dir)?;
    let mut w = Writer {
        dir: &cfg.output_dir,
        files: BTreeSet::new(),
    };
    w.put("config.json", serde_json::to_string_pretty(cfg)? + "\n")?;

    let needs_targets = cfg.pipeline.needs_targets() || cfg.mode == EvalMode::Baseline;
    let ds = if needs_targets {
        let (usable, diag) = usable_sentences(&all);
        w.put("diagnostics.csv", diag.to_csv())?;
        usable
    } else {
        all
    };
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }

    let spec = &cfg.pipeline;
    let (micro_f1, summary) = match cfg.mode {
        EvalMode::Holdout => {
            let (train, test) = stratified_holdout_split(&ds, cfg.train_fraction, cfg.seed)?;
            let fitted = fit_pipeline(spec, &train, &res)?;
            let pred = fitted.predict_dataset(&test)?;
            let report = compute_metrics_by_domain(&test.labels(), &pred, &domains_of(&test))?;
            w.report(&report)?;
            w.errors(&error_report(&test, &pred)?)?;
            if cfg.save_model {
                w.put("model.cmod", serialize_pipeline(&fitted)?)?;
            }
            (
                report.micro_f1,
                format!("holdout micro-F1 {:.4} on {} sentences", report.micro_f1, test.len()),
            )
        }
        EvalMode::Cv => {
            let cv = cross_validate_with(&ds, cfg.folds, cfg.seed, pipeline_fit_predict(spec, &res))?;
            w.put("cv.csv", cv.to_csv())?;
            w.put("cv.md", cv.to_markdown())?;
            let pooled = compute_metrics_by_domain(&ds.labels(), &cv.predictions, &domains_of(&ds))?;
            w.report(&pooled)?;
            w.errors(&error_report(&ds, &cv.predictions)?)?;
            if cfg.chart {
                let names = ["micro", "NONE", "BETTER", "WORSE"];
                let means = [cv.mean_micro_f1, cv.mean_class_f1[0], cv.mean_class_f1[1], cv.mean_class_f1[2]];
                let stds = [cv.std_micro_f1, cv.std_class_f1[0], cv.std_class_f1[1], cv.std_class_f1[2]];
                let bars: Vec<(String, f64, f64)> =
                    (0..4).map(|i| (names[i].to_string(), means[i], stds[i])).collect();
                w.put("chart.svg", svg_bar_chart(&format!("{}-fold F1", cfg.folds), &bars))?;
            }
            (
                cv.mean_micro_f1,
                format!(
                    "{}-fold micro-F1 {:.4} ± {:.4} on {} sentences",
                    cfg.folds,
                    cv.mean_micro_f1,
                    cv.std_micro_f1,
                    ds.len()
                ),
            )
        }
        EvalMode::CrossDomain => {
            let m = cross_domain_with(&ds, &cfg.domains, cfg.folds, cfg.seed, pipeline_fit_predict(spec, &res))?;
            w.put("cross_domain.csv", m.to_csv())?;
            w.put("cross_domain.md", m.to_markdown())?;
            let cells: Vec<f64> = m.cells.iter().flatten().copied().collect();
            let min = cells.iter().cloned().fold(f64::INFINITY, f64::min);
            let mean = cells.iter().sum::<f64>() / cells.len() as f64;
            (mean, format!("cross-domain micro-F1 mean {mean:.4}, min {min:.4}"))
        }
        EvalMode::Baseline => {
            let lex = cfg.lexicon()?;
            let target = if cfg.baseline_on_holdout {
                stratified_holdout_split(&ds, cfg.train_fraction, cfg.seed)?.1
            } else {
                ds.clone()
            };
            let pred = rule_predict_dataset(&target, &lex)?;
            let report = compute_metrics_by_domain(&target.labels(), &pred, &domains_of(&target))?;
            w.report(&report)?;
            w.errors(&error_report(&target, &pred)?)?;
            (
                report.micro_f1,
                format!("rule baseline micro-F1 {:.4} on {} sentences", report.micro_f1, target.len()),
            )
        }
    };
    w.put("summary.txt", format!("{summary}\n"))?;
    Ok(ExperimentOutcome {
        files: w.files,
        micro_f1,
        summary,
    })
}
