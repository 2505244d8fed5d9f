use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sorted `(index, weight)` pairs over a fixed dimension. Zeros are never stored.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SparseVector {
    dim: usize,
    entries: Vec<(usize, f64)>,
}

impl SparseVector {
    pub fn zeros(dim: usize) -> SparseVector {
        SparseVector {
            dim,
            entries: Vec::new(),
        }
    }

    /// Builds a vector from arbitrary `(index, weight)` pairs; duplicate
    /// indices are summed and zero weights dropped.
    pub fn from_pairs<I>(dim: usize, pairs: I) -> Result<SparseVector>
    where
        I: IntoIterator<Item = (usize, f64)>,
    {
        let mut entries: Vec<(usize, f64)> = pairs.into_iter().collect();
        if let Some(&(i, _)) = entries.iter().find(|(i, _)| *i >= dim) {
            return Err(Error::InvalidArgument(format!(
                "index {i} out of range for dimension {dim}"
            )));
        }
        entries.sort_by_key(|(i, _)| *i);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(entries.len());
        for (i, w) in entries {
            match merged.last_mut() {
                Some((last, acc)) if *last == i => *acc += w,
                _ => merged.push((i, w)),
            }
        }
        merged.retain(|(_, w)| *w != 0.0);
        Ok(SparseVector {
            dim,
            entries: merged,
        })
    }

    pub fn from_dense(values: &[f64]) -> SparseVector {
        SparseVector {
            dim: values.len(),
            entries: values
                .iter()
                .enumerate()
                .filter(|(_, v)| **v != 0.0)
                .map(|(i, v)| (i, *v))
                .collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.entries.iter().copied()
    }

    pub fn get(&self, index: usize) -> f64 {
        match self.entries.binary_search_by_key(&index, |(i, _)| *i) {
            Ok(pos) => self.entries[pos].1,
            Err(_) => 0.0,
        }
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for &(i, w) in &self.entries {
            out[i] = w;
        }
        out
    }

    pub fn dot(&self, dense: &[f64]) -> f64 {
        self.entries.iter().map(|&(i, w)| w * dense[i]).sum()
    }
}

/// A fixed-length real vector (e.g. an averaged embedding).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DenseVector(pub Vec<f64>);

impl DenseVector {
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn to_sparse(&self) -> SparseVector {
        SparseVector::from_dense(&self.0)
    }
}

#[derive(Debug, Clone, Copy)]
pub enum FeatureBlock<'a> {
    Sparse(&'a SparseVector),
    Dense(&'a DenseVector),
}

impl<'a> From<&'a SparseVector> for FeatureBlock<'a> {
    fn from(v: &'a SparseVector) -> Self {
        FeatureBlock::Sparse(v)
    }
}

impl<'a> From<&'a DenseVector> for FeatureBlock<'a> {
    fn from(v: &'a DenseVector) -> Self {
        FeatureBlock::Dense(v)
    }
}

/// Concatenates blocks, offsetting each block's indices by the dimensions
/// that precede it.
pub fn concat_features(blocks: &[FeatureBlock<'_>]) -> Result<SparseVector> {
    if blocks.is_empty() {
        return Err(Error::InvalidArgument("nothing to concatenate".into()));
    }
    let mut dim = 0;
    let mut entries = Vec::new();
    for block in blocks {
        match block {
            FeatureBlock::Sparse(v) => {
                entries.extend(v.iter().map(|(i, w)| (i + dim, w)));
                dim += v.dim();
            }
            FeatureBlock::Dense(v) => {
                entries.extend(
                    v.0.iter()
                        .enumerate()
                        .filter(|(_, w)| **w != 0.0)
                        .map(|(i, w)| (i + dim, *w)),
                );
                dim += v.dim();
            }
        }
    }
    Ok(SparseVector { dim, entries })
}
