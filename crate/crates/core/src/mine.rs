//! Small-scale candidate mining: seed pairs, an inverted index over a sentence
//! file, pair queries with optional cue words, and seeded sampling.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::preprocess::tokenize;
use crate::rng;

fn lower_tokens(text: &str) -> Vec<String> {
    tokenize(text).into_iter().map(|t| t.lower).collect()
}

/// Sentences sorted by id, plus postings from lowercased token to sentence numbers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "IndexRepr", into = "IndexRepr")]
pub struct SentenceIndex {
    ids: Vec<String>,
    texts: Vec<String>,
    tokens: Vec<Vec<String>>,
    postings: BTreeMap<String, Vec<u32>>,
}

#[derive(Serialize, Deserialize)]
struct IndexRepr {
    sentences: Vec<(String, String)>,
}

impl From<IndexRepr> for SentenceIndex {
    fn from(r: IndexRepr) -> Self {
        assemble(r.sentences)
    }
}

impl From<SentenceIndex> for IndexRepr {
    fn from(ix: SentenceIndex) -> Self {
        IndexRepr {
            sentences: ix.ids.into_iter().zip(ix.texts).collect(),
        }
    }
}

fn assemble(mut sentences: Vec<(String, String)>) -> SentenceIndex {
    sentences.sort_by(|a, b| a.0.cmp(&b.0));
    let mut postings: BTreeMap<String, Vec<u32>> = BTreeMap::new();
    let mut tokens = Vec::with_capacity(sentences.len());
    for (n, (_, text)) in sentences.iter().enumerate() {
        let toks = lower_tokens(text);
        let distinct: BTreeSet<&String> = toks.iter().collect();
        for t in distinct {
            postings.entry(t.clone()).or_default().push(n as u32);
        }
        tokens.push(toks);
    }
    let (ids, texts) = sentences.into_iter().unzip();
    SentenceIndex {
        ids,
        texts,
        tokens,
        postings,
    }
}

pub fn build_index<I>(sentences: I) -> Result<SentenceIndex>
where
    I: IntoIterator<Item = (String, String)>,
{
    let sentences: Vec<(String, String)> = sentences.into_iter().collect();
    let mut seen = HashSet::with_capacity(sentences.len());
    for (id, _) in &sentences {
        if !seen.insert(id.as_str()) {
            return Err(Error::DuplicateId(id.clone()));
        }
    }
    Ok(assemble(sentences))
}

impl SentenceIndex {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn postings(&self, token: &str) -> &[u32] {
        self.postings.get(token).map_or(&[], Vec::as_slice)
    }

    pub fn vocabulary(&self) -> impl Iterator<Item = &str> {
        self.postings.keys().map(String::as_str)
    }

    pub fn id(&self, n: usize) -> &str {
        &self.ids[n]
    }

    pub fn text(&self, id: &str) -> Option<&str> {
        self.ids
            .binary_search_by(|x| x.as_str().cmp(id))
            .ok()
            .map(|n| self.texts[n].as_str())
    }

    pub fn tokens(&self, n: usize) -> &[String] {
        &self.tokens[n]
    }

    pub fn sentences(&self) -> impl Iterator<Item = (&str, &str)> {
        self.ids.iter().map(String::as_str).zip(self.texts.iter().map(String::as_str))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TargetPair {
    pub item_a: String,
    pub item_b: String,
    pub pair_type: String,
}

/// All unordered pairs within each pair type, types in order of first
/// appearance, pairs in input order. Case-insensitive repeats are skipped.
pub fn generate_pairs(items: &[(String, String)]) -> Vec<TargetPair> {
    let mut groups: Vec<(String, Vec<String>)> = Vec::new();
    for (name, ty) in items {
        let g = match groups.iter().position(|(t, _)| t == ty) {
            Some(i) => &mut groups[i].1,
            None => {
                groups.push((ty.clone(), Vec::new()));
                &mut groups.last_mut().expect("just pushed").1
            }
        };
        if !g.iter().any(|x| x.to_lowercase() == name.to_lowercase()) {
            g.push(name.clone());
        }
    }
    let mut out = Vec::new();
    for (ty, names) in &groups {
        for i in 0..names.len() {
            for j in i + 1..names.len() {
                out.push(TargetPair {
                    item_a: names[i].clone(),
                    item_b: names[j].clone(),
                    pair_type: ty.clone(),
                });
            }
        }
    }
    out
}

/// Drops pairs with an item on the stoplist (case-insensitive).
pub fn apply_stoplist(pairs: Vec<TargetPair>, stoplist: &BTreeSet<String>) -> Vec<TargetPair> {
    let stop: BTreeSet<String> = stoplist.iter().map(|s| s.to_lowercase()).collect();
    pairs
        .into_iter()
        .filter(|p| !stop.contains(&p.item_a.to_lowercase()) && !stop.contains(&p.item_b.to_lowercase()))
        .collect()
}

fn contains_run(haystack: &[String], needle: &[String]) -> bool {
    !needle.is_empty() && haystack.windows(needle.len()).any(|w| w == needle)
}

fn intersect(a: &[u32], b: &[u32]) -> Vec<u32> {
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::new();
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

/// True when `tokens` contain both items as adjacent runs (and a cue, if given).
pub fn sentence_matches(tokens: &[String], a: &[String], b: &[String], cues: Option<&BTreeSet<String>>) -> bool {
    contains_run(tokens, a)
        && contains_run(tokens, b)
        && cues.map_or(true, |c| tokens.iter().any(|t| c.contains(t)))
}

/// Ids of sentences containing both items, ascending.
pub fn query_pair(index: &SentenceIndex, pair: &TargetPair, cue_words: Option<&BTreeSet<String>>) -> Vec<String> {
    let a = lower_tokens(&pair.item_a);
    let b = lower_tokens(&pair.item_b);
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut terms: Vec<&String> = a.iter().chain(&b).collect();
    terms.sort_by_key(|t| index.postings(t).len());
    terms.dedup();
    let mut candidates = index.postings(terms[0]).to_vec();
    for t in &terms[1..] {
        if candidates.is_empty() {
            break;
        }
        candidates = intersect(&candidates, index.postings(t));
    }
    let cues: Option<BTreeSet<String>> = cue_words.map(|c| c.iter().map(|w| w.to_lowercase()).collect());
    candidates
        .into_iter()
        .filter(|&n| sentence_matches(&index.tokens[n as usize], &a, &b, cues.as_ref()))
        .map(|n| index.ids[n as usize].clone())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairResults {
    pub pair: TargetPair,
    /// Query without cue words.
    pub all: Vec<String>,
    /// Query restricted to sentences with a cue word.
    pub with_cue: Vec<String>,
}

pub fn query_all(index: &SentenceIndex, pairs: &[TargetPair], cue_words: &BTreeSet<String>) -> Vec<PairResults> {
    pairs
        .iter()
        .map(|p| PairResults {
            pair: p.clone(),
            all: query_pair(index, p, None),
            with_cue: query_pair(index, p, Some(cue_words)),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Candidate {
    pub sentence_id: String,
    pub pair: TargetPair,
    pub cue_filtered: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateSample {
    pub candidates: Vec<Candidate>,
    /// Fewer candidates were available than requested.
    pub exhausted: bool,
    pub pairs_kept: usize,
    pub pairs_cue_filtered: usize,
}

/// Picks `round(cue_bias · n)` of the `n` pairs at random to use their
/// cue-filtered results, drops pairs whose chosen results number fewer than
/// `min_support`, then samples `sample_size` (pair, sentence) candidates.
pub fn sample_candidates(
    results: &[PairResults],
    min_support: usize,
    cue_bias: f64,
    sample_size: usize,
    seed: u64,
) -> Result<CandidateSample> {
    if !(0.0..=1.0).contains(&cue_bias) {
        return Err(Error::InvalidArgument(format!("cue_bias {cue_bias} outside [0, 1]")));
    }
    let mut rng = rng::seeded(seed);
    let mut order: Vec<usize> = (0..results.len()).collect();
    rng::shuffle(&mut order, &mut rng);
    let n_cue = (cue_bias * results.len() as f64).round() as usize;
    let mut use_cue = vec![false; results.len()];
    for &i in &order[..n_cue] {
        use_cue[i] = true;
    }
    let mut pool = Vec::new();
    let mut pairs_kept = 0;
    let mut pairs_cue_filtered = 0;
    for (i, r) in results.iter().enumerate() {
        let ids = if use_cue[i] { &r.with_cue } else { &r.all };
        if use_cue[i] {
            pairs_cue_filtered += 1;
        }
        if ids.len() < min_support {
            continue;
        }
        pairs_kept += 1;
        for id in ids {
            pool.push((i, id));
        }
    }
    let exhausted = sample_size > pool.len();
    rng::shuffle(&mut pool, &mut rng);
    pool.truncate(sample_size);
    pool.sort();
    let candidates = pool
        .into_iter()
        .map(|(i, id)| Candidate {
            sentence_id: id.clone(),
            pair: results[i].pair.clone(),
            cue_filtered: use_cue[i],
        })
        .collect();
    Ok(CandidateSample {
        candidates,
        exhausted,
        pairs_kept,
        pairs_cue_filtered,
    })
}

/// Reads `id<TAB>sentence` lines; blank lines are skipped.
pub fn read_sentences_tsv<R: BufRead>(reader: R) -> Result<Vec<(String, String)>> {
    read_two_columns(reader, "id<TAB>sentence")
}

/// Reads `item<TAB>pair_type` lines.
pub fn read_items_tsv<R: BufRead>(reader: R) -> Result<Vec<(String, String)>> {
    read_two_columns(reader, "item<TAB>pair_type")
}

fn read_two_columns<R: BufRead>(reader: R, shape: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let (a, b) = line.split_once('\t').ok_or_else(|| Error::Format {
            line: i + 1,
            message: format!("expected {shape}"),
        })?;
        out.push((a.trim().to_string(), b.trim().to_string()));
    }
    Ok(out)
}

/// One JSON object per candidate with the corpus fields except label and confidence.
pub fn write_candidates_jsonl<W: Write>(index: &SentenceIndex, sample: &CandidateSample, mut out: W) -> Result<()> {
    for c in &sample.candidates {
        let record = serde_json::json!({
            "id": format!("{}|{}|{}", c.sentence_id, c.pair.item_a, c.pair.item_b),
            "text": index.text(&c.sentence_id).unwrap_or_default(),
            "object_a": c.pair.item_a,
            "object_b": c.pair.item_b,
            "domain": c.pair.pair_type,
        });
        serde_json::to_writer(&mut out, &record)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ix(texts: &[&str]) -> SentenceIndex {
        build_index(texts.iter().enumerate().map(|(i, t)| (format!("{i:03}"), t.to_string()))).unwrap()
    }

    fn pair(a: &str, b: &str) -> TargetPair {
        TargetPair {
            item_a: a.into(),
            item_b: b.into(),
            pair_type: "t".into(),
        }
    }

    #[test]
    fn postings_and_duplicates() {
        let index = ix(&["a b", "b c", "c c a"]);
        assert_eq!(index.postings("a"), &[0, 2]);
        assert_eq!(index.postings("c"), &[1, 2]);
        assert_eq!(index.vocabulary().count(), 3);
        assert!(build_index(vec![("x".into(), "a".into()), ("x".into(), "b".into())]).is_err());
        let empty = build_index(Vec::new()).unwrap();
        assert!(query_pair(&empty, &pair("a", "b"), None).is_empty());
    }

    #[test]
    fn queries() {
        let index = ix(&["python beats matlab", "python is fun"]);
        assert_eq!(query_pair(&index, &pair("Python", "MATLAB"), None), vec!["000"]);
        let better: BTreeSet<String> = ["better".to_string()].into();
        assert!(query_pair(&index, &pair("python", "matlab"), Some(&better)).is_empty());
        let beats: BTreeSet<String> = ["beats".to_string()].into();
        assert_eq!(query_pair(&index, &pair("python", "matlab"), Some(&beats)), vec!["000"]);

        let index = ix(&["Windows is not 8 times faster than Linux", "Windows 8 beats Linux"]);
        assert_eq!(query_pair(&index, &pair("Windows 8", "linux"), None), vec!["001"]);
    }

    #[test]
    fn pairs() {
        let items: Vec<(String, String)> = [("a", "x"), ("b", "x"), ("c", "x")]
            .iter()
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect();
        let p = generate_pairs(&items);
        let names: Vec<(&str, &str)> = p.iter().map(|p| (p.item_a.as_str(), p.item_b.as_str())).collect();
        assert_eq!(names, vec![("a", "b"), ("a", "c"), ("b", "c")]);

        let items: Vec<(String, String)> = [("a", "x"), ("c", "y"), ("b", "x"), ("d", "y")]
            .iter()
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect();
        assert_eq!(generate_pairs(&items).len(), 2);
        assert!(generate_pairs(&[("a".into(), "x".into())]).is_empty());

        let stop: BTreeSet<String> = ["A".to_string()].into();
        assert_eq!(apply_stoplist(generate_pairs(&items), &stop).len(), 1);
    }

    fn results(n_pairs: usize, hits: usize) -> Vec<PairResults> {
        (0..n_pairs)
            .map(|i| PairResults {
                pair: pair(&format!("a{i}"), &format!("b{i}")),
                all: (0..hits).map(|h| format!("{i}-{h}")).collect(),
                with_cue: (0..hits / 2).map(|h| format!("{i}-{h}")).collect(),
            })
            .collect()
    }

    #[test]
    fn sampling() {
        let r = results(10, 200);
        let s = sample_candidates(&r, 1, 0.9, 50, 4).unwrap();
        assert_eq!(s.pairs_cue_filtered, 9);
        assert_eq!(s.candidates.len(), 50);
        assert!(!s.exhausted);
        assert_eq!(s, sample_candidates(&r, 1, 0.9, 50, 4).unwrap());

        let s = sample_candidates(&r, 1, 0.0, 10, 4).unwrap();
        assert_eq!(s.pairs_cue_filtered, 0);
        assert!(s.candidates.iter().all(|c| !c.cue_filtered));

        let r = results(1, 99);
        let s = sample_candidates(&r, 100, 0.0, 10, 0).unwrap();
        assert_eq!(s.pairs_kept, 0);
        assert!(s.exhausted);
        assert!(s.candidates.is_empty());

        assert!(sample_candidates(&r, 1, 1.5, 10, 0).is_err());
    }

    #[test]
    fn io() {
        let rows = read_sentences_tsv("1\tA beats B\n\n2\tB\n".as_bytes()).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(matches!(read_sentences_tsv("1 no tab\n".as_bytes()), Err(Error::Format { line: 1, .. })));
        let index = build_index(rows).unwrap();
        let json = serde_json::to_string(&index).unwrap();
        let back: SentenceIndex = serde_json::from_str(&json).unwrap();
        assert_eq!(back, index);
        let r = query_all(&index, &[pair("a", "b")], &BTreeSet::new());
        let s = sample_candidates(&r, 1, 0.0, 5, 0).unwrap();
        let mut buf = Vec::new();
        write_candidates_jsonl(&index, &s, &mut buf).unwrap();
        let line: serde_json::Value = serde_json::from_slice(buf.split(|&b| b == b'\n').next().unwrap()).unwrap();
        assert_eq!(line["text"], "A beats B");
        assert_eq!(line["object_a"], "a");
    }
}
