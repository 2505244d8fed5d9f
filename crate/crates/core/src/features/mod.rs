//! Sentence representations: bag-of-words/n-grams, POS n-grams, the JJR
//! flag, averaged word embeddings and hashed dependency paths.

pub mod deps;
mod embeddings;
mod hashing;
mod pos;
mod sparse;
mod vocab;

pub use deps::{
    extract_dependency_path, DependencyGraph, DependencyPath, DepNode, Direction, PathMode, PathNode,
};
pub use embeddings::{average_embedding, load_embeddings, EmbeddingTable};
pub use hashing::{fnv1a64, hash_path_features, DEFAULT_HASH_DIMENSION, NOPATH_INDEX};
pub use pos::{
    contains_jjr, fit_pos_ngram_space, vectorize_pos_ngrams, PosNgramSpace, DEFAULT_POS_CAPACITY,
};
pub use sparse::{concat_features, DenseVector, FeatureBlock, SparseVector};
pub use vocab::{fit_vocabulary, ngrams, vectorize_bow, Vocabulary, Weighting};
