//! Feature-mismatch dissimilarity matrix.
//!
//! Cell `(i, j)` counts the features on which instances `i` and `j` disagree.
//! The matrix is symmetric with a zero diagonal; nothing else (in particular
//! no triangle inequality) is assumed downstream.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::exec::Exec;
use crate::features::FeatureMatrix;

#[derive(Debug, Error)]
pub enum DissimError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("matrix is not symmetric at ({i}, {j})")]
    Asymmetric { i: usize, j: usize },
    #[error("matrix diagonal is nonzero at {0}")]
    NonzeroDiagonal(usize),
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

/// Symmetric `n × n` integer matrix stored as its strict upper triangle.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DissimilarityMatrix {
    n: usize,
    upper: Vec<u32>,
}

/// Offset of `(i, j)`, `i < j`, in a row-major strict upper triangle.
#[inline]
pub(crate) fn condensed_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    i * (2 * n - i - 1) / 2 + (j - i - 1)
}

impl DissimilarityMatrix {
    /// Builds from a full square matrix, checking symmetry and the diagonal.
    pub fn from_square(rows: &[Vec<u32>]) -> Result<Self, DissimError> {
        let n = rows.len();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(DissimError::Parse {
                    line: i + 1,
                    message: format!("expected {n} entries, found {}", row.len()),
                });
            }
            if row[i] != 0 {
                return Err(DissimError::NonzeroDiagonal(i));
            }
        }
        let mut upper = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        #[allow(clippy::needless_range_loop)] // symmetric access reads clearer by index
        for i in 0..n {
            for j in i + 1..n {
                if rows[i][j] != rows[j][i] {
                    return Err(DissimError::Asymmetric { i, j });
                }
                upper.push(rows[i][j]);
            }
        }
        Ok(DissimilarityMatrix { n, upper })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> u32 {
        match i.cmp(&j) {
            std::cmp::Ordering::Equal => 0,
            std::cmp::Ordering::Less => self.upper[condensed_index(self.n, i, j)],
            std::cmp::Ordering::Greater => self.upper[condensed_index(self.n, j, i)],
        }
    }

    pub fn row(&self, i: usize) -> Vec<u32> {
        (0..self.n).map(|j| self.get(i, j)).collect()
    }

    pub fn to_square(&self) -> Vec<Vec<u32>> {
        (0..self.n).map(|i| self.row(i)).collect()
    }

    /// Each row as a point in `n`-dimensional space.
    pub fn row_vectors(&self) -> Vec<Vec<f64>> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j) as f64).collect())
            .collect()
    }

    /// Lower triangle including the diagonal, one row per line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for i in 0..self.n {
            for j in 0..=i {
                if j > 0 {
                    out.push(' ');
                }
                write!(out, "{}", self.get(i, j)).unwrap();
            }
            out.push('\n');
        }
        out
    }

    /// Reads either the lower-triangular layout of [`Self::to_text`] or a
    /// full square matrix.
    pub fn from_text(text: &str) -> Result<Self, DissimError> {
        let mut rows = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let row = line
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|s| !s.is_empty())
                .map(|s| {
                    s.parse::<u32>().map_err(|e| DissimError::Parse {
                        line: idx + 1,
                        message: format!("{s:?}: {e}"),
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            rows.push(row);
        }
        let n = rows.len();
        let triangular = rows.iter().enumerate().all(|(i, r)| r.len() == i + 1);
        if triangular && n > 1 {
            let mut square = vec![vec![0; n]; n];
            for (i, row) in rows.iter().enumerate() {
                if row[i] != 0 {
                    return Err(DissimError::NonzeroDiagonal(i));
                }
                for (j, &v) in row.iter().enumerate() {
                    square[i][j] = v;
                    square[j][i] = v;
                }
            }
            return Self::from_square(&square);
        }
        Self::from_square(&rows)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, DissimError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| DissimError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_text(&text)
    }
}

/// Counts pairwise feature mismatches.
pub fn build(matrix: &FeatureMatrix) -> DissimilarityMatrix {
    build_with(matrix, Exec::default())
}

pub fn build_with(matrix: &FeatureMatrix, exec: Exec) -> DissimilarityMatrix {
    let n = matrix.n_rows();
    let rows = exec.map_range(n, |i| {
        let a = matrix.row(i);
        (i + 1..n)
            .map(|j| {
                let b = matrix.row(j);
                a.iter().zip(b).filter(|(x, y)| x != y).count() as u32
            })
            .collect::<Vec<u32>>()
    });
    DissimilarityMatrix {
        n,
        upper: rows.concat(),
    }
}
