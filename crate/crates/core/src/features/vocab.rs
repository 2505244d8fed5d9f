//! Bag-of-words and bag-of-n-grams vocabularies.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::SparseVector;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Weighting {
    Binary,
    Tf,
    Tfidf,
}

impl FromStr for Weighting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "").as_str() {
            "binary" => Ok(Weighting::Binary),
            "tf" => Ok(Weighting::Tf),
            "tfidf" => Ok(Weighting::Tfidf),
            other => Err(Error::InvalidArgument(format!("unknown weighting `{other}`"))),
        }
    }
}

impl fmt::Display for Weighting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Weighting::Binary => "binary",
            Weighting::Tf => "tf",
            Weighting::Tfidf => "tfidf",
        })
    }
}

/// Terms observed at fit time, indexed in lexicographic order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "VocabularyRepr", into = "VocabularyRepr")]
pub struct Vocabulary {
    terms: Vec<String>,
    df: Vec<usize>,
    n_docs: usize,
    ngram_range: (usize, usize),
    index: HashMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
struct VocabularyRepr {
    terms: Vec<String>,
    df: Vec<usize>,
    n_docs: usize,
    ngram_range: (usize, usize),
}

impl From<VocabularyRepr> for Vocabulary {
    fn from(r: VocabularyRepr) -> Self {
        let index = r
            .terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Vocabulary {
            terms: r.terms,
            df: r.df,
            n_docs: r.n_docs,
            ngram_range: r.ngram_range,
            index,
        }
    }
}

impl From<Vocabulary> for VocabularyRepr {
    fn from(v: Vocabulary) -> Self {
        VocabularyRepr {
            terms: v.terms,
            df: v.df,
            n_docs: v.n_docs,
            ngram_range: v.ngram_range,
        }
    }
}

/// Lowercased n-grams of orders `lo..=hi`, words joined by `_`.
pub fn ngrams<S: AsRef<str>>(tokens: &[S], (lo, hi): (usize, usize)) -> Vec<String> {
    let lower: Vec<String> = tokens.iter().map(|t| t.as_ref().to_lowercase()).collect();
    let mut out = Vec::new();
    for n in lo..=hi {
        if n == 0 || n > lower.len() {
            continue;
        }
        for window in lower.windows(n) {
            out.push(window.join("_"));
        }
    }
    out
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    pub fn ngram_range(&self) -> (usize, usize) {
        self.ngram_range
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn df(&self, index: usize) -> usize {
        self.df[index]
    }

    /// Smoothed inverse document frequency `ln((1 + N) / (1 + df)) + 1`.
    pub fn idf(&self, index: usize) -> f64 {
        ((1.0 + self.n_docs as f64) / (1.0 + self.df[index] as f64)).ln() + 1.0
    }
}

pub fn fit_vocabulary<S: AsRef<str>>(
    docs: &[Vec<S>],
    ngram_range: (usize, usize),
    min_df: usize,
) -> Result<Vocabulary> {
    let (lo, hi) = ngram_range;
    if lo < 1 || lo > hi {
        return Err(Error::InvalidArgument(format!(
            "invalid n-gram range ({lo}, {hi})"
        )));
    }
    if docs.is_empty() {
        return Err(Error::InvalidArgument("no documents to fit".into()));
    }
    let mut df: BTreeMap<String, usize> = BTreeMap::new();
    for doc in docs {
        let mut grams = ngrams(doc, ngram_range);
        grams.sort();
        grams.dedup();
        for g in grams {
            *df.entry(g).or_insert(0) += 1;
        }
    }
    let kept: Vec<(String, usize)> = df.into_iter().filter(|(_, c)| *c >= min_df.max(1)).collect();
    if kept.is_empty() {
        return Err(Error::EmptyVocabulary);
    }
    let (terms, df): (Vec<String>, Vec<usize>) = kept.into_iter().unzip();
    Ok(VocabularyRepr {
        terms,
        df,
        n_docs: docs.len(),
        ngram_range,
    }
    .into())
}

pub fn vectorize_bow<S: AsRef<str>>(tokens: &[S], vocab: &Vocabulary, weighting: Weighting) -> SparseVector {
    let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
    for gram in ngrams(tokens, vocab.ngram_range) {
        if let Some(i) = vocab.index_of(&gram) {
            *counts.entry(i).or_insert(0.0) += 1.0;
        }
    }
    let pairs = counts.into_iter().map(|(i, tf)| {
        let w = match weighting {
            Weighting::Binary => 1.0,
            Weighting::Tf => tf,
            Weighting::Tfidf => tf * vocab.idf(i),
        };
        (i, w)
    });
    SparseVector::from_pairs(vocab.len(), pairs).expect("vocabulary indices are in range")
}
