//! Tokenization, target location, beginning/middle/ending partitioning,
//! target replacement and scope selection.

mod tagger;

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use tagger::{pos_tag, tag_tokens};

const PUNCTUATION: &[char] = &['.', ',', '!', '?', ';', ':', '(', ')', '"', '\''];

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Token {
    pub surface: String,
    pub lower: String,
    pub position: usize,
}

impl Token {
    pub fn new(surface: impl Into<String>, position: usize) -> Token {
        let surface = surface.into();
        Token {
            lower: surface.to_lowercase(),
            surface,
            position,
        }
    }
}

/// Splits on whitespace, then separates the characters `.,!?;:()"'` and the
/// clitic `n't` into tokens of their own.
pub fn tokenize(text: &str) -> Vec<Token> {
    let mut surfaces: Vec<String> = Vec::new();
    for chunk in text.split_whitespace() {
        let chars: Vec<char> = chunk.chars().collect();
        let mut current = String::new();
        let mut i = 0;
        while i < chars.len() {
            if i > 0 && is_clitic_at(&chars, i) {
                if !current.is_empty() {
                    surfaces.push(std::mem::take(&mut current));
                }
                surfaces.push(chars[i..i + 3].iter().collect());
                i += 3;
                continue;
            }
            let c = chars[i];
            if PUNCTUATION.contains(&c) {
                if !current.is_empty() {
                    surfaces.push(std::mem::take(&mut current));
                }
                surfaces.push(c.to_string());
            } else {
                current.push(c);
            }
            i += 1;
        }
        if !current.is_empty() {
            surfaces.push(current);
        }
    }
    surfaces
        .into_iter()
        .enumerate()
        .map(|(position, s)| Token::new(s, position))
        .collect()
}

/// `n't` starting at `i`, ending the chunk or followed by punctuation.
fn is_clitic_at(chars: &[char], i: usize) -> bool {
    if i + 3 > chars.len() {
        return false;
    }
    let n = chars[i].to_ascii_lowercase() == 'n';
    let apostrophe = chars[i + 1] == '\'' || chars[i + 1] == '\u{2019}';
    let t = chars[i + 2].to_ascii_lowercase() == 't';
    let boundary = i + 3 == chars.len() || PUNCTUATION.contains(&chars[i + 3]);
    n && apostrophe && t && boundary
}

/// Token ranges of the two targets in surface order.
///
/// `swapped` is set when `object_b` occurs before `object_a`; `first` is then
/// the span of `object_b`. Label orientation is relative to `object_a`, so a
/// caller that reasons in surface order must invert BETTER/WORSE.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TargetSpans {
    pub first: Range<usize>,
    pub second: Range<usize>,
    pub swapped: bool,
}

impl TargetSpans {
    pub fn is_valid_for(&self, len: usize) -> bool {
        self.first.start < self.first.end
            && self.first.end <= self.second.start
            && self.second.start < self.second.end
            && self.second.end <= len
    }
}

fn occurrences(tokens: &[Token], needle: &[String]) -> Vec<Range<usize>> {
    if needle.is_empty() || needle.len() > tokens.len() {
        return Vec::new();
    }
    (0..=tokens.len() - needle.len())
        .filter(|&start| {
            needle
                .iter()
                .enumerate()
                .all(|(k, w)| tokens[start + k].lower == *w)
        })
        .map(|start| start..start + needle.len())
        .collect()
}

fn overlaps(a: &Range<usize>, b: &Range<usize>) -> bool {
    a.start < b.end && b.start < a.end
}

fn object_tokens(object: &str) -> Vec<String> {
    tokenize(object).into_iter().map(|t| t.lower).collect()
}

/// Finds the first case-insensitive occurrence of each object.
///
/// When the first occurrences overlap, the longer object (then the earlier
/// one) keeps its occurrence and the other moves to its first occurrence that
/// does not overlap it.
pub fn locate_targets(tokens: &[Token], object_a: &str, object_b: &str) -> Result<TargetSpans> {
    let needle_a = object_tokens(object_a);
    let needle_b = object_tokens(object_b);
    if needle_a.is_empty() {
        return Err(Error::InvalidArgument("object_a is empty".into()));
    }
    if needle_b.is_empty() {
        return Err(Error::InvalidArgument("object_b is empty".into()));
    }
    let occ_a = occurrences(tokens, &needle_a);
    let occ_b = occurrences(tokens, &needle_b);
    if occ_a.is_empty() {
        return Err(Error::TargetsNotFound(object_a.to_string()));
    }
    if occ_b.is_empty() {
        return Err(Error::TargetsNotFound(object_b.to_string()));
    }

    let (span_a, span_b) = if !overlaps(&occ_a[0], &occ_b[0]) {
        (occ_a[0].clone(), occ_b[0].clone())
    } else {
        let a_wins = needle_a.len() > needle_b.len()
            || (needle_a.len() == needle_b.len() && occ_a[0].start <= occ_b[0].start);
        let (winner, loser) = if a_wins { (&occ_a, &occ_b) } else { (&occ_b, &occ_a) };
        let resolved = loser
            .iter()
            .find(|r| !overlaps(r, &winner[0]))
            .map(|r| (winner[0].clone(), r.clone()))
            .or_else(|| {
                winner
                    .iter()
                    .find(|r| !overlaps(r, &loser[0]))
                    .map(|r| (r.clone(), loser[0].clone()))
            })
            .ok_or_else(|| Error::Overlap(object_a.to_string(), object_b.to_string()))?;
        if a_wins {
            resolved
        } else {
            (resolved.1, resolved.0)
        }
    };

    Ok(if span_a.start < span_b.start {
        TargetSpans {
            first: span_a,
            second: span_b,
            swapped: false,
        }
    } else {
        TargetSpans {
            first: span_b,
            second: span_a,
            swapped: true,
        }
    })
}

/// A sentence cut around its two targets. Concatenating the five fields in
/// declaration order restores the input sequence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceParts<T = Token> {
    pub beginning: Vec<T>,
    pub first_target: Vec<T>,
    pub middle: Vec<T>,
    pub second_target: Vec<T>,
    pub ending: Vec<T>,
}

impl<T: Clone> SentenceParts<T> {
    pub fn reconstruct(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(
            self.beginning.len()
                + self.first_target.len()
                + self.middle.len()
                + self.second_target.len()
                + self.ending.len(),
        );
        out.extend_from_slice(&self.beginning);
        out.extend_from_slice(&self.first_target);
        out.extend_from_slice(&self.middle);
        out.extend_from_slice(&self.second_target);
        out.extend_from_slice(&self.ending);
        out
    }
}

/// Splits `items` (tokens, or anything aligned with them) at `spans`.
pub fn partition<T: Clone>(items: &[T], spans: &TargetSpans) -> Result<SentenceParts<T>> {
    if !spans.is_valid_for(items.len()) {
        return Err(Error::InvalidArgument(format!(
            "spans {:?}/{:?} invalid for {} tokens",
            spans.first,
            spans.second,
            items.len()
        )));
    }
    Ok(SentenceParts {
        beginning: items[..spans.first.start].to_vec(),
        first_target: items[spans.first.clone()].to_vec(),
        middle: items[spans.first.end..spans.second.start].to_vec(),
        second_target: items[spans.second.clone()].to_vec(),
        ending: items[spans.second.end..].to_vec(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReplacementStrategy {
    Keep,
    Remove,
    /// Both targets become `ITEM`.
    Oblivious,
    /// Targets become `ITEM_A` and `ITEM_B` in surface order.
    Distinct,
}

impl FromStr for ReplacementStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "keep" => Ok(Self::Keep),
            "remove" => Ok(Self::Remove),
            "oblivious" => Ok(Self::Oblivious),
            "distinct" => Ok(Self::Distinct),
            other => Err(Error::InvalidArgument(format!(
                "unknown replacement strategy `{other}`"
            ))),
        }
    }
}

impl fmt::Display for ReplacementStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Keep => "keep",
            Self::Remove => "remove",
            Self::Oblivious => "oblivious",
            Self::Distinct => "distinct",
        })
    }
}

/// Items that can stand in for a replaced target.
pub trait Placeholder: Clone {
    /// `name` is `ITEM`, `ITEM_A` or `ITEM_B`; `position` is where the target began.
    fn placeholder(name: &str, position: usize) -> Self;
}

impl Placeholder for Token {
    fn placeholder(name: &str, position: usize) -> Self {
        Token::new(name, position)
    }
}

/// A token with its part-of-speech tag. Placeholders are tagged `NNP`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaggedToken {
    pub token: Token,
    pub tag: String,
}

impl Placeholder for TaggedToken {
    fn placeholder(name: &str, position: usize) -> Self {
        TaggedToken {
            token: Token::new(name, position),
            tag: "NNP".into(),
        }
    }
}

impl Placeholder for String {
    fn placeholder(name: &str, _position: usize) -> Self {
        name.to_string()
    }
}

pub fn apply_replacement<T: Placeholder>(
    parts: &SentenceParts<T>,
    strategy: ReplacementStrategy,
) -> SentenceParts<T> {
    let first_pos = parts.beginning.len();
    let second_pos = first_pos + parts.first_target.len() + parts.middle.len();
    let replace = |name: &str, pos: usize| vec![T::placeholder(name, pos)];
    let (first_target, second_target) = match strategy {
        ReplacementStrategy::Keep => (parts.first_target.clone(), parts.second_target.clone()),
        ReplacementStrategy::Remove => (Vec::new(), Vec::new()),
        ReplacementStrategy::Oblivious => (replace("ITEM", first_pos), replace("ITEM", second_pos)),
        ReplacementStrategy::Distinct => {
            (replace("ITEM_A", first_pos), replace("ITEM_B", second_pos))
        }
    };
    SentenceParts {
        beginning: parts.beginning.clone(),
        first_target,
        middle: parts.middle.clone(),
        second_target,
        ending: parts.ending.clone(),
    }
}

/// Which parts of a partitioned sentence feed feature extraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scope {
    Full,
    Parts {
        beginning: bool,
        middle: bool,
        ending: bool,
    },
}

impl Scope {
    pub const MIDDLE: Scope = Scope::Parts {
        beginning: false,
        middle: true,
        ending: false,
    };

    pub fn parts(beginning: bool, middle: bool, ending: bool) -> Result<Scope> {
        if !(beginning || middle || ending) {
            return Err(Error::InvalidArgument("scope selects no part".into()));
        }
        Ok(Scope::Parts {
            beginning,
            middle,
            ending,
        })
    }

    /// Parses `full` or a `+`/`,`-separated subset of `beginning`, `middle`, `ending`.
    pub fn from_names<S: AsRef<str>>(names: &[S]) -> Result<Scope> {
        let (mut b, mut m, mut e, mut full) = (false, false, false, false);
        for name in names {
            match name.as_ref().trim().to_ascii_lowercase().as_str() {
                "full" => full = true,
                "beginning" => b = true,
                "middle" => m = true,
                "ending" => e = true,
                other => {
                    return Err(Error::InvalidArgument(format!("unknown scope `{other}`")))
                }
            }
        }
        match (full, b || m || e) {
            (true, true) => Err(Error::InvalidArgument(
                "scope `full` cannot be combined with parts".into(),
            )),
            (true, false) => Ok(Scope::Full),
            (false, _) => Scope::parts(b, m, e),
        }
    }
}

impl FromStr for Scope {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let names: Vec<&str> = s.split(['+', ',']).collect();
        Scope::from_names(&names)
    }
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scope::Full => f.write_str("full"),
            Scope::Parts {
                beginning,
                middle,
                ending,
            } => {
                let names: Vec<&str> = [(*beginning, "beginning"), (*middle, "middle"), (*ending, "ending")]
                    .into_iter()
                    .filter_map(|(on, n)| on.then_some(n))
                    .collect();
                f.write_str(&names.join("+"))
            }
        }
    }
}

pub fn select_scope<T: Clone>(parts: &SentenceParts<T>, scope: Scope) -> Vec<T> {
    match scope {
        Scope::Full => parts.reconstruct(),
        Scope::Parts {
            beginning,
            middle,
            ending,
        } => {
            let mut out = Vec::new();
            if beginning {
                out.extend_from_slice(&parts.beginning);
            }
            if middle {
                out.extend_from_slice(&parts.middle);
            }
            if ending {
                out.extend_from_slice(&parts.ending);
            }
            out
        }
    }
}
