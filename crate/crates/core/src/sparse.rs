//! Upper-triangle coordinate storage for real symmetric matrices with an
//! empty diagonal.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Entries with `|value| < DROP_TOLERANCE * max|value|` are not stored.
pub const DROP_TOLERANCE: f64 = 1e-14;

/// One stored upper-triangle element `(row, col, value)` with `row < col`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Entry {
    pub row: usize,
    pub col: usize,
    pub value: f64,
}

/// Real symmetric matrix with zero diagonal, stored as its strict upper
/// triangle. Entries are kept sorted by `(row, col)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetricSparse {
    dim: usize,
    entries: Vec<Entry>,
}

impl SymmetricSparse {
    /// Validates and sorts a list of upper-triangle entries.
    pub fn new(dim: usize, mut entries: Vec<Entry>) -> Result<Self> {
        for e in &entries {
            if e.row >= e.col {
                return Err(Error::InvalidSparse(format!(
                    "entry ({}, {}) is not strictly upper triangular",
                    e.row, e.col
                )));
            }
            if e.col >= dim {
                return Err(Error::InvalidSparse(format!(
                    "entry ({}, {}) outside dimension {dim}",
                    e.row, e.col
                )));
            }
            if !(e.value.is_finite() && e.value != 0.0) {
                return Err(Error::InvalidSparse(format!(
                    "entry ({}, {}) has value {}",
                    e.row, e.col, e.value
                )));
            }
        }
        entries.sort_by_key(|e| (e.row, e.col));
        if let Some(w) = entries
            .windows(2)
            .find(|w| (w[0].row, w[0].col) == (w[1].row, w[1].col))
        {
            return Err(Error::InvalidSparse(format!(
                "duplicate entry ({}, {})",
                w[0].row, w[0].col
            )));
        }
        Ok(Self { dim, entries })
    }

    pub fn empty(dim: usize) -> Self {
        Self {
            dim,
            entries: Vec::new(),
        }
    }

    /// Builds the matrix from accumulated `(i, j) -> value` contributions.
    /// Keys may be in either triangle; contributions to the same unordered
    /// pair are summed. Diagonal keys are rejected, and near-zero sums are
    /// dropped relative to the largest magnitude.
    pub fn from_accumulated(dim: usize, acc: BTreeMap<(usize, usize), f64>) -> Result<Self> {
        let mut upper: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for ((i, j), v) in acc {
            if i == j {
                return Err(Error::InvalidSparse(format!("diagonal entry at {i}")));
            }
            *upper.entry((i.min(j), i.max(j))).or_insert(0.0) += v;
        }
        let max_abs = upper.values().fold(0.0_f64, |m, v| m.max(v.abs()));
        let cut = DROP_TOLERANCE * max_abs;
        let entries = upper
            .into_iter()
            .filter(|(_, v)| v.abs() >= cut && *v != 0.0)
            .map(|((row, col), value)| Entry { row, col, value })
            .collect();
        Self::new(dim, entries)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    /// Number of stored upper-triangle entries.
    pub fn nnz_upper(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Element lookup in either triangle.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let key = (i.min(j), i.max(j));
        self.entries
            .binary_search_by_key(&key, |e| (e.row, e.col))
            .map(|k| self.entries[k].value)
            .unwrap_or(0.0)
    }

    /// Returns a copy with every value replaced by `f(index, value)`.
    pub(crate) fn map_values(&self, mut f: impl FnMut(usize, f64) -> f64) -> Self {
        let entries = self
            .entries
            .iter()
            .enumerate()
            .map(|(k, e)| Entry {
                value: f(k, e.value),
                ..*e
            })
            .collect();
        Self {
            dim: self.dim,
            entries,
        }
    }

    /// `y = V x` using both triangles.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim];
        for e in &self.entries {
            y[e.row] += e.value * x[e.col];
            y[e.col] += e.value * x[e.row];
        }
        y
    }

    /// Connected components of the coupling graph. Each component lists
    /// its indices ascending; components are ordered by their smallest index.
    pub fn connected_components(&self) -> Vec<Vec<usize>> {
        let mut parent: Vec<usize> = (0..self.dim).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for e in &self.entries {
            let (a, b) = (find(&mut parent, e.row), find(&mut parent, e.col));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
        let mut slot = vec![usize::MAX; self.dim];
        let mut out: Vec<Vec<usize>> = Vec::new();
        for i in 0..self.dim {
            let root = find(&mut parent, i);
            if slot[root] == usize::MAX {
                slot[root] = out.len();
                out.push(Vec::new());
            }
            out[slot[root]].push(i);
        }
        out
    }

    /// Row-major dense copy.
    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.dim;
        let mut m = vec![0.0; n * n];
        for e in &self.entries {
            m[e.row * n + e.col] = e.value;
            m[e.col * n + e.row] = e.value;
        }
        m
    }
}
