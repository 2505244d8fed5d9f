//! Fallback Penn Treebank tagger.
//!
//! Rules, first match wins: punctuation, closed-class lexicon, irregular
//! comparatives/superlatives, known adjective bases, numbers, `-er`/`-est`
//! over a known adjective base, capitalization after the first token, then
//! the `-ly`, `-ing` and `-ed` suffixes. Everything else is `NN`.

use std::collections::HashMap;
use std::sync::OnceLock;

use super::Token;

const CLOSED_CLASS: &[(&str, &[&str])] = &[
    (
        "DT",
        &[
            "the", "a", "an", "this", "that", "these", "those", "every", "each", "some", "any",
            "no", "another", "all", "both", "either", "neither",
        ],
    ),
    (
        "IN",
        &[
            "of", "in", "on", "at", "by", "for", "with", "about", "against", "between", "into",
            "through", "during", "before", "after", "above", "below", "from", "over", "under",
            "than", "because", "while", "although", "though", "if", "whether", "since", "unless",
            "until", "like", "as", "per", "via", "without", "within", "upon", "among", "toward",
            "towards", "across", "behind", "beyond", "despite", "near", "around", "onto", "versus",
            "vs", "whereas",
        ],
    ),
    ("RP", &["up", "down", "out", "off"]),
    ("TO", &["to"]),
    ("CC", &["and", "or", "but", "nor", "plus", "&"]),
    (
        "PRP",
        &[
            "i", "you", "he", "she", "it", "we", "they", "me", "him", "us", "them", "myself",
            "yourself", "himself", "herself", "itself", "ourselves", "themselves",
        ],
    ),
    ("PRP$", &["my", "your", "his", "her", "its", "our", "their"]),
    ("WDT", &["which", "whatever", "whichever"]),
    ("WP", &["what", "who", "whom"]),
    ("WP$", &["whose"]),
    ("WRB", &["where", "when", "why", "how"]),
    (
        "MD",
        &["can", "could", "will", "would", "shall", "should", "may", "might", "must", "ca", "wo"],
    ),
    ("VBZ", &["is", "has", "does", "seems", "gets", "makes"]),
    ("VBP", &["are", "am", "have", "do"]),
    ("VBD", &["was", "were", "had", "did", "got", "made", "went"]),
    ("VB", &["be", "get", "make", "go", "use"]),
    ("VBN", &["been", "done", "gone"]),
    ("VBG", &["being"]),
    ("EX", &["there"]),
    (
        "RB",
        &[
            "not", "n't", "very", "really", "much", "too", "also", "just", "so", "quite", "still",
            "even", "only", "already", "always", "never", "often", "now", "then", "here",
            "rather", "almost", "again", "well", "probably", "maybe", "perhaps", "however", "yet",
            "ever", "far", "away", "instead",
        ],
    ),
    (
        "JJR",
        &["better", "worse", "more", "less", "fewer", "lesser", "further", "farther"],
    ),
    (
        "JJS",
        &["best", "worst", "most", "least", "fewest", "furthest", "farthest"],
    ),
    (
        "CD",
        &[
            "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten",
            "hundred", "thousand", "million", "billion",
        ],
    ),
];

/// Gradable adjectives whose `-er`/`-est` forms are comparatives/superlatives.
const ADJECTIVE_BASES: &[&str] = &[
    "big", "bold", "brave", "bright", "busy", "calm", "cheap", "classy", "clean", "clear",
    "clever", "close", "clumsy", "cold", "comfy", "cool", "costly", "cozy", "crazy", "crisp",
    "crude", "cute", "dark", "deep", "dense", "dirty", "dry", "dull", "dumb", "early", "easy",
    "fancy", "fast", "fat", "few", "fine", "firm", "fit", "flimsy", "fresh", "friendly", "funny",
    "gentle", "grand", "great", "handy", "happy", "hard", "hardy", "harsh", "healthy", "heavy",
    "high", "hot", "huge", "humble", "juicy", "keen", "kind", "lame", "large", "late", "light",
    "lively", "long", "loose", "loud", "lousy", "lovely", "low", "lucky", "mean", "messy",
    "mighty", "mild", "narrow", "nasty", "near", "neat", "new", "nice", "noble", "noisy", "old",
    "plain", "poor", "pretty", "pricey", "proud", "pure", "quick", "quiet", "rare", "rich",
    "ripe", "risky", "rough", "rude", "sad", "safe", "salty", "sane", "scary", "shabby",
    "shallow", "sharp", "short", "sick", "silly", "simple", "slick", "sleek", "slim", "slow",
    "small", "smart", "smooth", "snappy", "soft", "sound", "speedy", "spicy", "steady", "steep",
    "strict", "strong", "stupid", "sturdy", "subtle", "sweet", "tall", "tasty", "thick", "thin",
    "tidy", "tight", "tiny", "tough", "true", "ugly", "vast", "warm", "weak", "wealthy", "wet",
    "wide", "wild", "wise", "worthy", "young", "zippy",
];

fn lexicon() -> &'static HashMap<&'static str, &'static str> {
    static LEXICON: OnceLock<HashMap<&'static str, &'static str>> = OnceLock::new();
    LEXICON.get_or_init(|| {
        let mut map = HashMap::new();
        for base in ADJECTIVE_BASES {
            map.insert(*base, "JJ");
        }
        for (tag, words) in CLOSED_CLASS {
            for w in *words {
                map.insert(*w, *tag);
            }
        }
        map
    })
}

fn is_adjective_base(word: &str) -> bool {
    lexicon().get(word) == Some(&"JJ")
}

/// Candidate bases for a word carrying `suffix` (`er` or `est`).
fn graded_base(word: &str, suffix: &str) -> bool {
    let Some(stem) = word.strip_suffix(suffix) else {
        return false;
    };
    if stem.len() < 2 {
        return false;
    }
    let mut candidates = vec![stem.to_string(), format!("{stem}e")];
    if let Some(y_stem) = stem.strip_suffix('i') {
        candidates.push(format!("{y_stem}y"));
    }
    let bytes = stem.as_bytes();
    if bytes.len() >= 3 && bytes[bytes.len() - 1] == bytes[bytes.len() - 2] {
        candidates.push(stem[..stem.len() - 1].to_string());
    }
    candidates.iter().any(|c| is_adjective_base(c))
}

fn punctuation_tag(surface: &str) -> Option<&'static str> {
    Some(match surface {
        "." | "!" | "?" => ".",
        "," => ",",
        ";" | ":" => ":",
        "(" => "-LRB-",
        ")" => "-RRB-",
        "\"" | "'" => "''",
        _ => return None,
    })
}

fn is_number(word: &str) -> bool {
    let mut digits = 0;
    for c in word.chars() {
        if c.is_ascii_digit() {
            digits += 1;
        } else if !matches!(c, '.' | ',' | '%' | '-' | '/' | '$') {
            return false;
        }
    }
    digits > 0
}

fn tag_one(token: &Token, index: usize) -> &'static str {
    let lower = token.lower.as_str();
    if let Some(tag) = punctuation_tag(&token.surface) {
        return tag;
    }
    if let Some(tag) = lexicon().get(lower) {
        return tag;
    }
    if is_number(lower) {
        return "CD";
    }
    if graded_base(lower, "er") {
        return "JJR";
    }
    if graded_base(lower, "est") {
        return "JJS";
    }
    let first = token.surface.chars().next();
    let all_caps = token.surface.len() > 1
        && token
            .surface
            .chars()
            .all(|c| c.is_ascii_uppercase() || c == '_' || c.is_ascii_digit());
    if first.is_some_and(char::is_uppercase) && (index > 0 || all_caps) {
        return "NNP";
    }
    if lower.len() > 3 && lower.ends_with("ly") {
        return "RB";
    }
    if lower.len() > 4 && lower.ends_with("ing") {
        return "VBG";
    }
    if lower.len() > 3 && lower.ends_with("ed") {
        return "VBD";
    }
    "NN"
}

/// Heuristic tags for `tokens`, one per token.
pub fn tag_tokens(tokens: &[Token]) -> Vec<String> {
    tokens
        .iter()
        .enumerate()
        .map(|(i, t)| tag_one(t, i).to_string())
        .collect()
}

/// Uses `supplied` tags when present and aligned with `tokens`, otherwise the
/// heuristic tagger.
pub fn pos_tag(tokens: &[Token], supplied: Option<&[String]>) -> Vec<String> {
    match supplied {
        Some(tags) if tags.len() == tokens.len() => tags.to_vec(),
        _ => tag_tokens(tokens),
    }
}
