//! POS n-gram frequencies and the JJR flag.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::SparseVector;

pub const DEFAULT_POS_CAPACITY: usize = 500;
const ORDERS: std::ops::RangeInclusive<usize> = 2..=4;

fn pos_ngrams<S: AsRef<str>>(tags: &[S]) -> Vec<String> {
    let tags: Vec<&str> = tags.iter().map(AsRef::as_ref).collect();
    let mut out = Vec::new();
    for n in ORDERS {
        if n > tags.len() {
            break;
        }
        out.extend(tags.windows(n).map(|w| w.join("_")));
    }
    out
}

/// The most frequent POS bi-, tri- and four-grams seen at fit time.
/// Index order is rank order: frequency descending, then lexicographic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct PosNgramSpace {
    grams: Vec<String>,
    index: HashMap<String, usize>,
}

impl From<Vec<String>> for PosNgramSpace {
    fn from(grams: Vec<String>) -> Self {
        let index = grams.iter().enumerate().map(|(i, g)| (g.clone(), i)).collect();
        PosNgramSpace { grams, index }
    }
}

impl From<PosNgramSpace> for Vec<String> {
    fn from(s: PosNgramSpace) -> Self {
        s.grams
    }
}

impl PosNgramSpace {
    pub fn len(&self) -> usize {
        self.grams.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grams.is_empty()
    }

    pub fn grams(&self) -> &[String] {
        &self.grams
    }
}

pub fn fit_pos_ngram_space<S: AsRef<str>>(tag_sequences: &[Vec<S>], capacity: usize) -> PosNgramSpace {
    let mut freq: BTreeMap<String, usize> = BTreeMap::new();
    for tags in tag_sequences {
        for g in pos_ngrams(tags) {
            *freq.entry(g).or_insert(0) += 1;
        }
    }
    let mut ranked: Vec<(String, usize)> = freq.into_iter().collect();
    // stable sort keeps the lexicographic order of the BTreeMap within equal counts
    ranked.sort_by(|a, b| b.1.cmp(&a.1));
    ranked.truncate(capacity);
    ranked.into_iter().map(|(g, _)| g).collect::<Vec<_>>().into()
}

pub fn vectorize_pos_ngrams<S: AsRef<str>>(tags: &[S], space: &PosNgramSpace) -> SparseVector {
    let pairs = pos_ngrams(tags)
        .into_iter()
        .filter_map(|g| space.index.get(&g).map(|&i| (i, 1.0)));
    SparseVector::from_pairs(space.len(), pairs).expect("space indices are in range")
}

pub fn contains_jjr<S: AsRef<str>>(tags: &[S]) -> SparseVector {
    if tags.iter().any(|t| t.as_ref() == "JJR") {
        SparseVector::from_dense(&[1.0])
    } else {
        SparseVector::zeros(1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(tags: &str) -> Vec<String> {
        tags.split_whitespace().map(str::to_string).collect()
    }

    #[test]
    fn enumeration() {
        assert_eq!(pos_ngrams(&seq("DT NN VBZ")), ["DT_NN", "NN_VBZ", "DT_NN_VBZ"]);
        assert!(pos_ngrams(&seq("DT")).is_empty());
    }

    #[test]
    fn under_capacity_keeps_everything() {
        let space = fit_pos_ngram_space(&[seq("A B"), seq("B C"), seq("C D")], 500);
        assert_eq!(space.len(), 3);
    }

    #[test]
    fn tie_at_capacity_is_lexicographic() {
        // X_Y twice, then A_B and C_D once each; capacity 2 keeps X_Y and A_B
        let space = fit_pos_ngram_space(&[seq("X Y"), seq("X Y"), seq("C D"), seq("A B")], 2);
        assert_eq!(space.grams(), &["X_Y", "A_B"]);
    }

    #[test]
    fn counting() {
        let space: PosNgramSpace = vec!["DT_NN".to_string(), "NN_DT".to_string()].into();
        let v = vectorize_pos_ngrams(&seq("DT NN DT NN"), &space);
        assert_eq!(v.entries(), &[(0, 2.0), (1, 1.0)]);
        assert_eq!(vectorize_pos_ngrams::<String>(&[], &space).nnz(), 0);
        assert_eq!(vectorize_pos_ngrams(&seq("VB VB"), &space).nnz(), 0);
    }

    #[test]
    fn jjr_flag() {
        assert_eq!(contains_jjr(&seq("NNP VBZ JJR IN NNP")).get(0), 1.0);
        assert_eq!(contains_jjr(&seq("DT NN")).get(0), 0.0);
        let empty: Vec<String> = Vec::new();
        let v = contains_jjr(&empty);
        assert_eq!((v.dim(), v.nnz()), (1, 0));
    }
}
