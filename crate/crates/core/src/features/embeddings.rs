use std::collections::HashMap;
use std::io::{BufRead, BufReader, Read};

use super::DenseVector;
use crate::error::{Error, Result};

/// Word vectors read from the plain-text `word v1 ... vD` format.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EmbeddingTable {
    vectors: HashMap<String, Vec<f64>>,
    dim: Option<usize>,
}

impl EmbeddingTable {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn dim(&self) -> Option<usize> {
        self.dim
    }

    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.vectors.get(word).map(Vec::as_slice)
    }
}

pub fn load_embeddings<R: Read>(source: R) -> Result<EmbeddingTable> {
    let mut table = EmbeddingTable::default();
    for (i, line) in BufReader::new(source).lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        let mut fields = line.split_whitespace();
        let Some(word) = fields.next() else {
            continue;
        };
        let values = fields
            .map(|f| {
                f.parse::<f64>().map_err(|_| Error::Format {
                    line: lineno,
                    message: format!("`{f}` is not a number"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        if values.is_empty() {
            return Err(Error::Format {
                line: lineno,
                message: "word without vector".into(),
            });
        }
        match table.dim {
            None => table.dim = Some(values.len()),
            Some(d) if d != values.len() => {
                return Err(Error::Format {
                    line: lineno,
                    message: format!("expected {d} values, found {}", values.len()),
                })
            }
            Some(_) => {}
        }
        table.vectors.entry(word.to_string()).or_insert(values);
    }
    Ok(table)
}

/// Mean of the vectors of the in-table (lowercased) tokens; zeros when none is known.
pub fn average_embedding<S: AsRef<str>>(tokens: &[S], table: &EmbeddingTable) -> Result<DenseVector> {
    let dim = match table.dim {
        Some(d) if !table.is_empty() => d,
        _ => return Err(Error::EmptyEmbeddings),
    };
    let mut sum = vec![0.0; dim];
    let mut found = 0usize;
    for t in tokens {
        if let Some(v) = table.get(&t.as_ref().to_lowercase()) {
            for (s, x) in sum.iter_mut().zip(v) {
                *s += x;
            }
            found += 1;
        }
    }
    if found > 0 {
        for s in &mut sum {
            *s /= found as f64;
        }
    }
    Ok(DenseVector(sum))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loads_and_averages() {
        let table = load_embeddings("a 1 0\nb 0 1\n".as_bytes()).unwrap();
        assert_eq!((table.len(), table.dim()), (2, Some(2)));
        assert_eq!(average_embedding(&["a", "b"], &table).unwrap().0, vec![0.5, 0.5]);
        assert_eq!(average_embedding(&["A", "c"], &table).unwrap().0, vec![1.0, 0.0]);
        assert_eq!(average_embedding(&["c", "d"], &table).unwrap().0, vec![0.0, 0.0]);
    }

    #[test]
    fn inconsistent_dimension() {
        match load_embeddings("a 1 0 0\nb 0 1\n".as_bytes()) {
            Err(Error::Format { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_stream() {
        let table = load_embeddings("".as_bytes()).unwrap();
        assert!(table.is_empty());
        assert!(matches!(
            average_embedding(&["a"], &table),
            Err(Error::EmptyEmbeddings)
        ));
    }

    #[test]
    fn first_duplicate_wins() {
        let table = load_embeddings("a 1\na 2\n".as_bytes()).unwrap();
        assert_eq!(table.get("a"), Some(&[1.0][..]));
    }
}
