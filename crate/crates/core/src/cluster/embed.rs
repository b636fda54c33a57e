use std::io::BufRead;
use std::path::Path;

use serde::Deserialize;

use super::linalg::Matrix;
use super::ClusterError;
use crate::edit_ops::tokenize;

/// Comment embeddings, one row per comment id, stored as `f32`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    pub ids: Vec<String>,
    pub dim: usize,
    pub values: Vec<f32>,
}

impl EmbeddingMatrix {
    /// Builds a matrix, rejecting ragged or non-finite rows.
    pub fn from_rows(ids: Vec<String>, dim: usize, rows: Vec<Vec<f32>>) -> Result<Self, ClusterError> {
        assert_eq!(ids.len(), rows.len());
        let mut values = Vec::with_capacity(rows.len() * dim);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != dim {
                return Err(ClusterError::DimMismatch {
                    row: i,
                    expected: dim,
                    found: row.len(),
                });
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(ClusterError::NonFiniteValue(i));
            }
            values.extend(row);
        }
        Ok(Self { ids, dim, values })
    }

    pub fn rows(&self) -> usize {
        self.ids.len()
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn to_matrix(&self) -> Matrix {
        Matrix {
            rows: self.rows(),
            cols: self.dim,
            data: self.values.iter().map(|v| *v as f64).collect(),
        }
    }
}

#[derive(Deserialize)]
struct JsonRow {
    id: serde_json::Value,
    vec: Vec<f32>,
}

fn parse_err(line: usize, message: impl ToString) -> ClusterError {
    ClusterError::Parse {
        line,
        message: message.to_string(),
    }
}

/// Reads either the text format (header `n d`, then `n` rows of
/// whitespace-separated floats; ids are row numbers) or JSONL
/// `{"id", "vec"}` lines. Row indices in errors are 0-based.
pub fn parse_embeddings<R: BufRead>(reader: R) -> Result<EmbeddingMatrix, ClusterError> {
    let mut lines = reader.lines().enumerate().filter_map(|(i, l)| match l {
        Ok(s) if s.trim().is_empty() => None,
        Ok(s) => Some(Ok((i + 1, s))),
        Err(e) => Some(Err(ClusterError::from(e))),
    });
    let Some(first) = lines.next() else {
        return Ok(EmbeddingMatrix {
            ids: vec![],
            dim: 0,
            values: vec![],
        });
    };
    let (first_no, first) = first?;
    let header: Vec<&str> = first.split_whitespace().collect();
    let numeric_header = header.len() == 2 && header.iter().all(|h| h.parse::<usize>().is_ok());
    if numeric_header {
        let n: usize = header[0].parse().unwrap();
        let d: usize = header[1].parse().unwrap();
        let mut rows = Vec::with_capacity(n);
        for item in lines {
            let (no, line) = item?;
            let row = line
                .split_whitespace()
                .map(|t| t.parse::<f32>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| parse_err(no, e))?;
            rows.push(row);
        }
        if rows.len() != n {
            return Err(parse_err(first_no, format!("header announces {n} rows, found {}", rows.len())));
        }
        let ids = (0..n).map(|i| i.to_string()).collect();
        return EmbeddingMatrix::from_rows(ids, d, rows);
    }
    let mut ids = Vec::new();
    let mut rows = Vec::new();
    for item in std::iter::once(Ok((first_no, first))).chain(lines) {
        let (no, line) = item?;
        let row: JsonRow = serde_json::from_str(&line).map_err(|e| parse_err(no, e))?;
        ids.push(match row.id {
            serde_json::Value::String(s) => s,
            other => other.to_string(),
        });
        rows.push(row.vec);
    }
    let dim = rows.first().map_or(0, Vec::len);
    EmbeddingMatrix::from_rows(ids, dim, rows)
}

pub fn load_embeddings(path: &Path) -> Result<EmbeddingMatrix, ClusterError> {
    let f = std::fs::File::open(path)?;
    parse_embeddings(std::io::BufReader::new(f))
}

/// Deterministic bag-of-words embedder used when no external embeddings
/// are supplied.
///
/// Each lowercased token is hashed with 64-bit FNV-1a; the hash picks a
/// bucket (modulo `dim`) and its top bit a sign. The vector is L2
/// normalized; text without tokens maps to the zero vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HashedBowEmbedder {
    pub dim: usize,
}

impl Default for HashedBowEmbedder {
    fn default() -> Self {
        Self { dim: 256 }
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in bytes {
        h ^= *b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

impl HashedBowEmbedder {
    pub fn embed(&self, text: &str) -> Vec<f32> {
        let mut v = vec![0.0f64; self.dim];
        for tok in tokenize(&text.to_lowercase()).iter() {
            if !tok.chars().any(char::is_alphanumeric) {
                continue;
            }
            let h = fnv1a(tok.as_bytes());
            let sign = if h >> 63 == 1 { -1.0 } else { 1.0 };
            v[(h % self.dim as u64) as usize] += sign;
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            v.iter_mut().for_each(|x| *x /= norm);
        }
        v.into_iter().map(|x| x as f32).collect()
    }

    pub fn embed_all<S: AsRef<str>>(&self, ids: Vec<String>, texts: &[S]) -> EmbeddingMatrix {
        let rows = texts.iter().map(|t| self.embed(t.as_ref())).collect();
        EmbeddingMatrix::from_rows(ids, self.dim, rows).expect("hashed embeddings are finite")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_format() {
        let m = parse_embeddings("3 4\n1 2 3 4\n0 0 0 0\n-1 .5 2 1e-3\n".as_bytes()).unwrap();
        assert_eq!((m.rows(), m.dim), (3, 4));
        assert_eq!(m.row(2)[1], 0.5);
        assert_eq!(m.ids, vec!["0", "1", "2"]);
    }

    #[test]
    fn empty_inputs() {
        assert_eq!(parse_embeddings("".as_bytes()).unwrap().rows(), 0);
        assert_eq!(parse_embeddings("0 8\n".as_bytes()).unwrap().rows(), 0);
    }

    #[test]
    fn validation_errors() {
        assert_eq!(
            parse_embeddings("3 2\n1 2\n3 4\n5 NaN\n".as_bytes()),
            Err(ClusterError::NonFiniteValue(2))
        );
        assert_eq!(
            parse_embeddings("2 2\n1 2\n3\n".as_bytes()),
            Err(ClusterError::DimMismatch { row: 1, expected: 2, found: 1 })
        );
        assert!(matches!(parse_embeddings("3 2\n1 2\n".as_bytes()), Err(ClusterError::Parse { .. })));
    }

    #[test]
    fn jsonl_format() {
        let text = "{\"id\":\"c1\",\"vec\":[1,2]}\n{\"id\":7,\"vec\":[3,4]}\n";
        let m = parse_embeddings(text.as_bytes()).unwrap();
        assert_eq!(m.ids, vec!["c1", "7"]);
        assert_eq!(m.row(1), &[3.0, 4.0]);
    }

    #[test]
    fn hashed_embedder() {
        let e = HashedBowEmbedder::default();
        let a = e.embed("Fix typo");
        assert_eq!(a.len(), 256);
        assert_eq!(a, e.embed("fix   TYPO"));
        let norm: f32 = a.iter().map(|x| x * x).sum();
        assert!((norm - 1.0).abs() < 1e-6);
        assert!(e.embed("...").iter().all(|x| *x == 0.0));
    }
}
