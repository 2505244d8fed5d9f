//! Sentence → feature vector → model, with fitting confined to training data.
//!
//! Labels are stored relative to `object_a`. When `object_b` is mentioned
//! first the sentence is "swapped": training flips its label to the surface
//! orientation (first mention vs. second mention) and predictions are flipped
//! back, so every model only ever sees one orientation.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Dataset, Label, LabeledSentence};
use crate::error::{Error, Result};
use crate::features::{
    concat_features, contains_jjr, extract_dependency_path, fit_pos_ngram_space, fit_vocabulary,
    hash_path_features, vectorize_bow, vectorize_pos_ngrams, average_embedding, DenseVector, DependencyGraph,
    DependencyPath, EmbeddingTable, FeatureBlock, PathMode, PosNgramSpace, SparseVector, Vocabulary, Weighting,
    DEFAULT_HASH_DIMENSION, DEFAULT_POS_CAPACITY,
};
use crate::models::{majority_baseline, train_model, Classifier, Model, ModelKind, ModelParams};
use crate::preprocess::{
    apply_replacement, locate_targets, partition, pos_tag, select_scope, tokenize, ReplacementStrategy, Scope,
    TaggedToken, TargetSpans, Token,
};
use crate::rules::{rule_classify, CueLexicon};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeatureKind {
    Bow,
    Ngrams,
    PosNgrams,
    Jjr,
    AvgEmbedding,
    DepPath,
}

impl FeatureKind {
    pub const ALL: [FeatureKind; 6] = [
        FeatureKind::Bow,
        FeatureKind::Ngrams,
        FeatureKind::PosNgrams,
        FeatureKind::Jjr,
        FeatureKind::AvgEmbedding,
        FeatureKind::DepPath,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FeatureKind::Bow => "bow",
            FeatureKind::Ngrams => "ngrams",
            FeatureKind::PosNgrams => "pos-ngrams",
            FeatureKind::Jjr => "jjr",
            FeatureKind::AvgEmbedding => "avg-embedding",
            FeatureKind::DepPath => "dep-path",
        }
    }
}

impl fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FeatureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('_', "-");
        FeatureKind::ALL
            .into_iter()
            .find(|k| k.as_str() == norm)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown feature `{s}`")))
    }
}

/// Everything needed to turn a training set into a fitted pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineSpec {
    pub scope: Scope,
    pub replacement: ReplacementStrategy,
    pub features: Vec<FeatureKind>,
    pub weighting: Weighting,
    /// N-gram orders for the `ngrams` feature.
    pub ngram_range: (usize, usize),
    pub min_df: usize,
    pub pos_capacity: usize,
    pub path_mode: PathMode,
    pub hash_dimension: usize,
    pub model: ModelKind,
    pub params: ModelParams,
}

impl Default for PipelineSpec {
    fn default() -> Self {
        PipelineSpec {
            scope: Scope::MIDDLE,
            replacement: ReplacementStrategy::Keep,
            features: vec![FeatureKind::Bow],
            weighting: Weighting::Binary,
            ngram_range: (1, 3),
            min_df: 1,
            pos_capacity: DEFAULT_POS_CAPACITY,
            path_mode: PathMode::Customized,
            hash_dimension: DEFAULT_HASH_DIMENSION,
            model: ModelKind::Gbdt,
            params: ModelParams::default(),
        }
    }
}

impl PipelineSpec {
    /// Whether sentences must have locatable targets.
    pub fn needs_targets(&self) -> bool {
        self.model != ModelKind::Majority
    }
}

/// External data some features need at fit and predict time.
#[derive(Debug, Clone, Default)]
pub struct Resources {
    pub embeddings: Option<Arc<EmbeddingTable>>,
}

/// A tokenized sentence with its located targets.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedSentence {
    pub tokens: Vec<Token>,
    pub spans: TargetSpans,
    pub tags: Vec<String>,
    pub graph: Option<DependencyGraph>,
}

pub fn prepare_sentence(s: &LabeledSentence) -> Result<PreparedSentence> {
    let tokens = tokenize(&s.text);
    let spans = locate_targets(&tokens, &s.object_a, &s.object_b)?;
    let tags = pos_tag(&tokens, s.pos_tags.as_deref());
    let graph = match &s.parse {
        Some(block) => {
            let g = DependencyGraph::parse_conll(block)?;
            (g.len() == tokens.len()).then_some(g)
        }
        None => None,
    };
    Ok(PreparedSentence {
        tokens,
        spans,
        tags,
        graph,
    })
}

/// Sentences left out of an experiment and why.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub excluded: Vec<(String, String)>,
}

impl Diagnostics {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("id,reason\n");
        for (id, reason) in &self.excluded {
            out.push_str(&format!("{},{}\n", crate::render::csv_cell(id), crate::render::csv_cell(reason)));
        }
        out
    }
}

/// Splits off sentences whose targets cannot be located or whose supplied
/// parse is malformed.
pub fn usable_sentences(ds: &Dataset) -> (Dataset, Diagnostics) {
    let outcomes: Vec<Option<String>> = ds
        .sentences()
        .par_iter()
        .map(|s| prepare_sentence(s).err().map(|e| e.to_string()))
        .collect();
    let mut keep = Vec::new();
    let mut diag = Diagnostics::default();
    for (i, o) in outcomes.into_iter().enumerate() {
        match o {
            None => keep.push(i),
            Some(reason) => diag.excluded.push((ds.sentences()[i].id.clone(), reason)),
        }
    }
    (ds.subset(&keep, format!("{} | usable", ds.provenance())), diag)
}

fn oriented(label: Label, swapped: bool) -> Label {
    if swapped {
        label.inverted()
    } else {
        label
    }
}

struct Views {
    words: Vec<String>,
    tags: Vec<String>,
    path: Option<DependencyPath>,
}

fn views(p: &PreparedSentence, spec: &PipelineSpec) -> Result<Views> {
    let parts = partition(&p.tokens, &p.spans)?;
    let words = select_scope(&apply_replacement(&parts, spec.replacement), spec.scope)
        .into_iter()
        .map(|t| t.lower)
        .collect();
    let tags = if spec.features.iter().any(|f| matches!(f, FeatureKind::PosNgrams | FeatureKind::Jjr)) {
        let tagged: Vec<TaggedToken> = p
            .tokens
            .iter()
            .zip(&p.tags)
            .map(|(t, tag)| TaggedToken {
                token: t.clone(),
                tag: tag.clone(),
            })
            .collect();
        let parts = partition(&tagged, &p.spans)?;
        select_scope(&apply_replacement(&parts, spec.replacement), spec.scope)
            .into_iter()
            .map(|t| t.tag)
            .collect()
    } else {
        Vec::new()
    };
    let path = if spec.features.contains(&FeatureKind::DepPath) {
        Some(match &p.graph {
            Some(g) => {
                let path = extract_dependency_path(g, &p.spans, spec.path_mode)?;
                if spec.replacement == ReplacementStrategy::Keep {
                    path
                } else {
                    path.with_target_placeholders()
                }
            }
            None => DependencyPath::NoPath,
        })
    } else {
        None
    };
    Ok(Views { words, tags, path })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum FittedFeature {
    Bow(Vocabulary),
    Ngrams(Vocabulary),
    PosNgrams(PosNgramSpace),
    Jjr,
    AvgEmbedding { dim: usize },
    DepPath { dimension: usize },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FittedPipeline {
    spec: PipelineSpec,
    features: Vec<FittedFeature>,
    model: Model,
    #[serde(skip)]
    embeddings: Option<Arc<EmbeddingTable>>,
}

impl PartialEq for FittedPipeline {
    fn eq(&self, other: &Self) -> bool {
        self.spec == other.spec && self.features == other.features && self.model == other.model
    }
}

impl FittedPipeline {
    pub fn spec(&self) -> &PipelineSpec {
        &self.spec
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    /// Reattaches external data after loading from disk.
    pub fn attach(&mut self, res: &Resources) {
        self.embeddings = res.embeddings.clone();
    }

    fn vectorize(&self, v: &Views) -> Result<SparseVector> {
        enum Part {
            Sparse(SparseVector),
            Dense(DenseVector),
        }
        let mut parts = Vec::with_capacity(self.features.len());
        for f in &self.features {
            parts.push(match f {
                FittedFeature::Bow(vocab) | FittedFeature::Ngrams(vocab) => {
                    Part::Sparse(vectorize_bow(&v.words, vocab, self.spec.weighting))
                }
                FittedFeature::PosNgrams(space) => Part::Sparse(vectorize_pos_ngrams(&v.tags, space)),
                FittedFeature::Jjr => Part::Sparse(contains_jjr(&v.tags)),
                FittedFeature::AvgEmbedding { dim } => {
                    let table = self.embeddings.as_ref().ok_or_else(|| {
                        Error::InvalidArgument("avg-embedding feature needs an embedding table".into())
                    })?;
                    let e = average_embedding(&v.words, table)?;
                    if e.dim() != *dim {
                        return Err(Error::DimensionMismatch {
                            expected: *dim,
                            actual: e.dim(),
                        });
                    }
                    Part::Dense(e)
                }
                FittedFeature::DepPath { dimension } => Part::Sparse(hash_path_features(
                    v.path.as_ref().unwrap_or(&DependencyPath::NoPath),
                    *dimension,
                )),
            });
        }
        let blocks: Vec<FeatureBlock> = parts
            .iter()
            .map(|p| match p {
                Part::Sparse(s) => FeatureBlock::Sparse(s),
                Part::Dense(d) => FeatureBlock::Dense(d),
            })
            .collect();
        concat_features(&blocks)
    }

    pub fn feature_vector(&self, s: &LabeledSentence) -> Result<(SparseVector, bool)> {
        let p = prepare_sentence(s)?;
        let v = views(&p, &self.spec)?;
        Ok((self.vectorize(&v)?, p.spans.swapped))
    }

    /// Label relative to `object_a` and the probabilities in that orientation.
    pub fn predict_sentence(&self, s: &LabeledSentence) -> Result<(Label, [f64; Label::COUNT])> {
        if !self.spec.needs_targets() {
            return self.model.predict(&SparseVector::zeros(0));
        }
        let (x, swapped) = self.feature_vector(s)?;
        let (label, mut p) = self.model.predict(&x)?;
        if swapped {
            p.swap(Label::Better.index(), Label::Worse.index());
        }
        Ok((oriented(label, swapped), p))
    }

    pub fn predict_dataset(&self, ds: &Dataset) -> Result<Vec<Label>> {
        ds.sentences()
            .par_iter()
            .map(|s| self.predict_sentence(s).map(|(l, _)| l))
            .collect()
    }
}

pub fn fit_pipeline(spec: &PipelineSpec, train: &Dataset, res: &Resources) -> Result<FittedPipeline> {
    if train.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if !spec.needs_targets() {
        return Ok(FittedPipeline {
            spec: spec.clone(),
            features: Vec::new(),
            model: Model::Majority(majority_baseline(&train.labels())?),
            embeddings: None,
        });
    }
    if spec.features.is_empty() {
        return Err(Error::InvalidArgument("a learned model needs at least one feature".into()));
    }
    let prepared: Vec<(Views, bool)> = train
        .sentences()
        .par_iter()
        .map(|s| {
            let p = prepare_sentence(s)?;
            Ok((views(&p, spec)?, p.spans.swapped))
        })
        .collect::<Result<_>>()?;

    let word_docs = || -> Vec<Vec<String>> { prepared.iter().map(|(v, _)| v.words.clone()).collect() };
    let mut features = Vec::new();
    let mut seen = Vec::new();
    for &f in &spec.features {
        if seen.contains(&f) {
            continue;
        }
        seen.push(f);
        features.push(match f {
            FeatureKind::Bow => FittedFeature::Bow(fit_vocabulary(&word_docs(), (1, 1), spec.min_df)?),
            FeatureKind::Ngrams => FittedFeature::Ngrams(fit_vocabulary(&word_docs(), spec.ngram_range, spec.min_df)?),
            FeatureKind::PosNgrams => {
                let seqs: Vec<Vec<String>> = prepared.iter().map(|(v, _)| v.tags.clone()).collect();
                FittedFeature::PosNgrams(fit_pos_ngram_space(&seqs, spec.pos_capacity))
            }
            FeatureKind::Jjr => FittedFeature::Jjr,
            FeatureKind::AvgEmbedding => {
                let table = res.embeddings.as_ref().ok_or_else(|| {
                    Error::InvalidArgument("avg-embedding feature needs an embedding table".into())
                })?;
                FittedFeature::AvgEmbedding {
                    dim: table.dim().ok_or(Error::EmptyEmbeddings)?,
                }
            }
            FeatureKind::DepPath => FittedFeature::DepPath {
                dimension: spec.hash_dimension.max(1),
            },
        });
    }
    let mut fitted = FittedPipeline {
        spec: spec.clone(),
        features,
        model: Model::Majority(majority_baseline(&train.labels())?),
        embeddings: res.embeddings.clone(),
    };
    let x: Vec<SparseVector> = prepared
        .par_iter()
        .map(|(v, _)| fitted.vectorize(v))
        .collect::<Result<_>>()?;
    let y: Vec<Label> = train
        .sentences()
        .iter()
        .zip(&prepared)
        .map(|(s, (_, swapped))| oriented(s.label, *swapped))
        .collect();
    fitted.model = train_model(spec.model, &x, &y, &spec.params)?;
    Ok(fitted)
}

/// Serializes a fitted pipeline in the model container with type `pipeline`.
pub fn serialize_pipeline(p: &FittedPipeline) -> Result<Vec<u8>> {
    Ok(crate::models::write_container("pipeline", &serde_json::to_vec(p)?))
}

pub fn deserialize_pipeline(bytes: &[u8], res: &Resources) -> Result<FittedPipeline> {
    let (kind, payload) = crate::models::read_container(bytes)?;
    if kind != "pipeline" {
        return Err(Error::ModelFormat(format!("type mismatch: expected pipeline, file holds {kind}")));
    }
    let mut p: FittedPipeline = serde_json::from_slice(payload)?;
    p.attach(res);
    Ok(p)
}

/// Rule baseline label relative to `object_a`.
pub fn rule_predict(s: &LabeledSentence, lex: &CueLexicon) -> Result<Label> {
    let tokens = tokenize(&s.text);
    let spans = locate_targets(&tokens, &s.object_a, &s.object_b)?;
    Ok(oriented(rule_classify(&tokens, &spans, lex), spans.swapped))
}

pub fn rule_predict_dataset(ds: &Dataset, lex: &CueLexicon) -> Result<Vec<Label>> {
    ds.sentences().par_iter().map(|s| rule_predict(s, lex)).collect()
}

/// `fit_predict` closure for the evaluation harness.
pub fn pipeline_fit_predict<'a>(
    spec: &'a PipelineSpec,
    res: &'a Resources,
) -> impl Fn(&Dataset, &Dataset) -> Result<Vec<Label>> + Sync + 'a {
    move |train, test| fit_pipeline(spec, train, res)?.predict_dataset(test)
}
