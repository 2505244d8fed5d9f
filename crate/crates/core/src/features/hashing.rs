//! Hashed bag-of-paths features.
//!
//! Every node rendering (`n:<lemma/POS/rel/dir>`) and every adjacent node pair
//! (`b:<left>|<right>`) is hashed with 64-bit FNV-1a over its UTF-8 bytes and
//! counted at `1 + hash % (dimension - 1)`. Index 0 is reserved for NOPATH.

use std::hash::Hasher;

use fnv::FnvHasher;

use super::deps::DependencyPath;
use super::SparseVector;

pub const DEFAULT_HASH_DIMENSION: usize = 4096;
pub const NOPATH_INDEX: usize = 0;

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h = FnvHasher::default();
    h.write(bytes);
    h.finish()
}

fn bucket(key: &str, dimension: usize) -> usize {
    if dimension <= 1 {
        return NOPATH_INDEX;
    }
    1 + (fnv1a64(key.as_bytes()) % (dimension as u64 - 1)) as usize
}

pub fn hash_path_features(path: &DependencyPath, dimension: usize) -> SparseVector {
    let dimension = dimension.max(1);
    let nodes = match path {
        DependencyPath::NoPath => {
            return SparseVector::from_pairs(dimension, [(NOPATH_INDEX, 1.0)])
                .expect("index 0 is in range");
        }
        DependencyPath::Path(nodes) => nodes,
    };
    let rendered: Vec<String> = nodes.iter().map(|n| n.render()).collect();
    let mut pairs: Vec<(usize, f64)> = rendered
        .iter()
        .map(|r| (bucket(&format!("n:{r}"), dimension), 1.0))
        .collect();
    pairs.extend(
        rendered
            .windows(2)
            .map(|w| (bucket(&format!("b:{}|{}", w[0], w[1]), dimension), 1.0)),
    );
    SparseVector::from_pairs(dimension, pairs).expect("buckets are in range")
}
