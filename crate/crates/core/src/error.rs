use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("record {index}: field `{field}`: {message}")]
    Record {
        index: usize,
        field: String,
        message: String,
    },

    #[error("unknown label `{0}` (expected BETTER, WORSE or NONE)")]
    UnknownLabel(String),

    #[error("empty dataset")]
    EmptyDataset,

    #[error("duplicate id `{0}`")]
    DuplicateId(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("target `{0}` not found in sentence")]
    TargetsNotFound(String),

    #[error("targets `{0}` and `{1}` overlap in every occurrence")]
    Overlap(String, String),

    #[error("empty vocabulary: every term was filtered out")]
    EmptyVocabulary,

    #[error("format error at line {line}: {message}")]
    Format { line: usize, message: String },

    #[error("embedding table is empty")]
    EmptyEmbeddings,

    #[error("malformed dependency graph: {0}")]
    Graph(String),

    #[error("dimension mismatch: model expects {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("model file: {0}")]
    ModelFormat(String),

    #[error("lexicon: {0}")]
    Lexicon(String),

    #[error("config: {}", .0.join("; "))]
    Config(Vec<String>),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
