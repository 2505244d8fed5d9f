//! Lexicon baseline: the first directional cue word decides the label, which
//! is inverted by a directly preceding negation or by `but` right before the
//! second target.

use std::collections::BTreeSet;
use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::preprocess::{TargetSpans, Token};

/// Shipped lexicon, `[BETTER]` and `[WORSE]` sections.
pub const DEFAULT_LEXICON: &str = include_str!("../data/cue_lexicon.txt");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CueLexicon {
    better: BTreeSet<String>,
    worse: BTreeSet<String>,
}

impl CueLexicon {
    pub fn new<I, J, S, T>(better: I, worse: J) -> Result<CueLexicon>
    where
        I: IntoIterator<Item = S>,
        J: IntoIterator<Item = T>,
        S: AsRef<str>,
        T: AsRef<str>,
    {
        let normalize = |w: &str| -> Result<String> {
            let w = w.trim().to_lowercase();
            if w.is_empty() || w.chars().any(char::is_whitespace) {
                return Err(Error::Lexicon(format!("`{w}` is not a single token")));
            }
            Ok(w)
        };
        let better = better
            .into_iter()
            .map(|w| normalize(w.as_ref()))
            .collect::<Result<BTreeSet<_>>>()?;
        let worse = worse
            .into_iter()
            .map(|w| normalize(w.as_ref()))
            .collect::<Result<BTreeSet<_>>>()?;
        if let Some(w) = better.intersection(&worse).next() {
            return Err(Error::Lexicon(format!("`{w}` appears in both sections")));
        }
        Ok(CueLexicon { better, worse })
    }

    pub fn default_lexicon() -> CueLexicon {
        load_cue_lexicon(DEFAULT_LEXICON.as_bytes()).expect("shipped lexicon is valid")
    }

    pub fn better_words(&self) -> &BTreeSet<String> {
        &self.better
    }

    pub fn worse_words(&self) -> &BTreeSet<String> {
        &self.worse
    }

    pub fn direction(&self, word: &str) -> Option<Label> {
        if self.better.contains(word) {
            Some(Label::Better)
        } else if self.worse.contains(word) {
            Some(Label::Worse)
        } else {
            None
        }
    }
}

pub fn load_cue_lexicon<R: Read>(mut source: R) -> Result<CueLexicon> {
    let mut text = String::new();
    source.read_to_string(&mut text)?;
    let mut better: Option<Vec<String>> = None;
    let mut worse: Option<Vec<String>> = None;
    let mut current: Option<Label> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        match line.to_ascii_uppercase().as_str() {
            "[BETTER]" => {
                if better.is_some() {
                    return Err(Error::Lexicon("duplicate [BETTER] section".into()));
                }
                better = Some(Vec::new());
                current = Some(Label::Better);
            }
            "[WORSE]" => {
                if worse.is_some() {
                    return Err(Error::Lexicon("duplicate [WORSE] section".into()));
                }
                worse = Some(Vec::new());
                current = Some(Label::Worse);
            }
            _ if line.starts_with('[') => {
                return Err(Error::Lexicon(format!("line {}: unknown section {line}", i + 1)));
            }
            _ => match current {
                Some(Label::Better) => better.as_mut().expect("section open").push(line.to_string()),
                Some(Label::Worse) => worse.as_mut().expect("section open").push(line.to_string()),
                _ => {
                    return Err(Error::Lexicon(format!(
                        "line {}: word `{line}` outside any section",
                        i + 1
                    )))
                }
            },
        }
    }
    let better = better.ok_or_else(|| Error::Lexicon("missing [BETTER] section".into()))?;
    let worse = worse.ok_or_else(|| Error::Lexicon("missing [WORSE] section".into()))?;
    CueLexicon::new(better, worse)
}

/// Labels a sentence from its lowercased tokens. `spans` are in surface order.
pub fn rule_classify(tokens: &[Token], spans: &TargetSpans, lex: &CueLexicon) -> Label {
    let Some((at, provisional)) = tokens
        .iter()
        .enumerate()
        .find_map(|(i, t)| lex.direction(&t.lower).map(|l| (i, l)))
    else {
        return Label::None;
    };
    let negated = at > 0 && matches!(tokens[at - 1].lower.as_str(), "not" | "n't");
    let but = spans.second.start > 0
        && tokens
            .get(spans.second.start - 1)
            .is_some_and(|t| t.lower == "but");
    if negated != but {
        provisional.inverted()
    } else {
        provisional
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::preprocess::{locate_targets, tokenize};

    fn classify(text: &str, a: &str, b: &str, lex: &CueLexicon) -> Label {
        let toks = tokenize(text);
        let spans = locate_targets(&toks, a, b).unwrap();
        rule_classify(&toks, &spans, lex)
    }

    #[test]
    fn shipped_lexicon_sizes() {
        let lex = CueLexicon::default_lexicon();
        assert_eq!(lex.better_words().len(), 74);
        assert_eq!(lex.worse_words().len(), 63);
        for w in ["better", "easier", "faster", "nicer", "wiser", "cooler", "decent", "safer", "superior", "solid", "terrific"] {
            assert_eq!(lex.direction(w), Some(Label::Better), "{w}");
        }
        for w in ["worse", "harder", "slower", "poorly", "uglier", "poorer", "lousy", "nastier", "inferior", "mediocre"] {
            assert_eq!(lex.direction(w), Some(Label::Worse), "{w}");
        }
    }

    #[test]
    fn loading() {
        let lex = load_cue_lexicon("[BETTER]\nBetter\ncheaper\neasier\n[WORSE]\nworse\nharder\nlower\n".as_bytes()).unwrap();
        assert_eq!(lex.better_words().len(), 3);
        assert_eq!(lex.worse_words().len(), 3);
        assert!(lex.better_words().contains("better"));
        assert!(load_cue_lexicon("[BETTER]\ngood\n[WORSE]\ngood\n".as_bytes()).is_err());
        let empty = load_cue_lexicon("[BETTER]\ngood\n[WORSE]\n".as_bytes()).unwrap();
        assert!(empty.worse_words().is_empty());
        assert!(load_cue_lexicon("[BETTER]\ngood\n".as_bytes()).is_err());
        assert!(load_cue_lexicon("good\n[BETTER]\n[WORSE]\n".as_bytes()).is_err());
    }

    #[test]
    fn example_sentences() {
        let lex = CueLexicon::default_lexicon();
        assert_eq!(
            classify(
                "I've concluded that it is better to use Python for scripting rather than Bash.",
                "Python",
                "Bash",
                &lex
            ),
            Label::Better
        );
        assert_eq!(
            classify("This time Windows 8 was roughly 8 percent slower than Windows 7.", "Windows 8", "Windows 7", &lex),
            Label::Worse
        );
        assert_eq!(classify("A is not better than B", "A", "B", &lex), Label::Worse);
        assert_eq!(classify("A isn't better than B", "A", "B", &lex), Label::Worse);
        assert_eq!(classify("A is better , but B", "A", "B", &lex), Label::Worse);
        assert_eq!(classify("A is not better , but B", "A", "B", &lex), Label::Better);
        assert_eq!(classify("A and B are both fine", "A", "B", &lex), Label::None);
    }
}
