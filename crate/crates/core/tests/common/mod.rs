//! Synthetic stand-in for the labelled corpus.
//!
//! Sentences come from templates over per-domain item lists, with the label
//! fixed by the template (including reversed and negated comparisons), a
//! little label noise, and a chain-shaped dependency parse so that path
//! lengths equal token distances.

#![allow(dead_code)]

use compsent::corpus::{Dataset, Label, LabeledSentence};
use compsent::preprocess::{pos_tag, tokenize};
use compsent::rng;
use rand::Rng as _;

pub const DOMAINS: [&str; 3] = ["brands", "compsci", "random"];

const ITEMS: [[&str; 8]; 3] = [
    ["nike", "adidas", "canon", "nikon", "sony", "samsung", "apple", "dell"],
    ["python", "matlab", "java", "ruby", "perl", "rust", "haskell", "scala"],
    ["tea", "coffee", "cats", "dogs", "trains", "buses", "summer", "winter"],
];
const BETTER: [&str; 6] = ["better", "faster", "easier", "nicer", "cheaper", "safer"];
const WORSE: [&str; 6] = ["worse", "slower", "harder", "uglier", "weaker", "pricier"];
const TOPICS: [&str; 6] = ["work", "beginners", "travel", "the money", "large projects", "daily use"];

fn pick<'a>(r: &mut rng::Rng, xs: &[&'a str]) -> &'a str {
    xs[r.gen_range(0..xs.len())]
}

fn render(label: Label, a: &str, b: &str, r: &mut rng::Rng) -> String {
    let bw = pick(r, &BETTER);
    let ww = pick(r, &WORSE);
    let t = pick(r, &TOPICS);
    let v = r.gen_range(0..4);
    match (label, v) {
        (Label::Better, 0) => format!("{a} is {bw} than {b} for {t} ."),
        (Label::Better, 1) => format!("i think {a} is much {bw} than {b} ."),
        (Label::Better, 2) => format!("{b} is {ww} than {a} in {t} ."),
        (Label::Better, _) => format!("honestly {a} is not {ww} than {b} at all ."),
        (Label::Worse, 0) => format!("{a} is {ww} than {b} for {t} ."),
        (Label::Worse, 1) => format!("in my opinion {a} is far {ww} than {b} ."),
        (Label::Worse, 2) => format!("{b} is {bw} than {a} for {t} ."),
        (Label::Worse, _) => format!("sadly {a} is not {bw} than {b} ."),
        (Label::None, 0) => format!("i installed {a} and {b} for {t} last week ."),
        (Label::None, 1) => format!("{a} , {b} and others are listed in the guide for {t} ."),
        (Label::None, 2) => format!("we talked about {a} with friends who also like {b} ."),
        (Label::None, _) => format!("is {a} {bw} than {b} for {t} ?"),
    }
}

/// CoNLL rows where every token hangs off its right neighbour.
pub fn chain_parse(text: &str) -> String {
    let tokens = tokenize(text);
    let tags = pos_tag(&tokens, None);
    let n = tokens.len();
    tokens
        .iter()
        .zip(&tags)
        .enumerate()
        .map(|(i, (tok, tag))| {
            let head = if i + 1 == n { 0 } else { i + 2 };
            let rel = if head == 0 { "root" } else { "dep" };
            format!("{}\t{}\t{}\t{tag}\t{head}\t{rel}", i + 1, tok.surface, tok.lower)
        })
        .collect::<Vec<_>>()
        .join("\n")
}

/// `counts[d]` gives the (NONE, BETTER, WORSE) counts for `DOMAINS[d]`.
/// `noise` is the probability of rendering a sentence from a different label's
/// template while keeping the assigned label.
pub fn synthetic_corpus(counts: [[usize; 3]; 3], noise: f64, seed: u64) -> Dataset {
    let mut r = rng::seeded(seed);
    let mut out = Vec::new();
    for (d, per_label) in counts.iter().enumerate() {
        for (li, &n) in per_label.iter().enumerate() {
            let label = Label::from_index(li).unwrap();
            for _ in 0..n {
                let ia = r.gen_range(0..8);
                let mut ib = r.gen_range(0..7);
                if ib >= ia {
                    ib += 1;
                }
                let (a, b) = (ITEMS[d][ia], ITEMS[d][ib]);
                let shown = if r.gen_bool(noise) {
                    Label::from_index((li + r.gen_range(1..3)) % 3).unwrap()
                } else {
                    label
                };
                let text = render(shown, a, b, &mut r);
                let confidence = [0.6, 0.75, 0.8, 0.9, 1.0, 1.0][r.gen_range(0..6)];
                out.push(LabeledSentence {
                    id: String::new(),
                    parse: Some(chain_parse(&text)),
                    text,
                    object_a: a.to_string(),
                    object_b: b.to_string(),
                    label,
                    domain: DOMAINS[d].to_string(),
                    confidence,
                    pos_tags: None,
                });
            }
        }
    }
    let mut order: Vec<usize> = (0..out.len()).collect();
    rng::shuffle(&mut order, &mut r);
    let sentences = order
        .into_iter()
        .enumerate()
        .map(|(k, i)| {
            let mut s = out[i].clone();
            s.id = format!("syn{k:05}");
            s
        })
        .collect();
    Dataset::new(sentences, format!("synthetic seed {seed}")).unwrap()
}

/// A small three-domain corpus with roughly the real label skew.
pub fn small_corpus(seed: u64) -> Dataset {
    synthetic_corpus([[110, 30, 14], [105, 28, 12], [112, 26, 13]], 0.03, seed)
}

/// Writes `ds` as JSONL into `dir` and returns the path.
pub fn write_jsonl(ds: &Dataset, dir: &std::path::Path, name: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    ds.write_jsonl(std::fs::File::create(&p).unwrap()).unwrap();
    p
}
