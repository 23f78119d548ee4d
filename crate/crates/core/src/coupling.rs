//! Coupling structure of the perturbation: neighbor sets `g_i`, the
//! one-step pairs `S₁`, the two-step triples behind `S₂`, and averaged
//! coupling statistics.
//!
//! "Nonzero" means "stored" throughout; no numerical powers of `V` are
//! formed, so cancellations in `(V²)_ij` do not remove a pathway.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::sparse::SymmetricSparse;

/// Ordered pair `(i, j)` with `V_ij ≠ 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Link {
    pub i: usize,
    pub j: usize,
    pub value: f64,
}

/// Two-step pathway `i → k → j` with `V_ij = 0` and `i ≠ j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Triple {
    pub i: usize,
    pub k: usize,
    pub j: usize,
    /// `V_ki · V_kj`
    pub weight: f64,
}

#[derive(Debug, Clone)]
pub struct CouplingGraph {
    /// `g_i` as `(j, V_ij)` sorted by `j`.
    pub neighbors: Vec<Vec<(usize, f64)>>,
    /// `S₁` in `(i, j)` order; symmetric under exchange.
    pub s1: Vec<Link>,
    /// Ordered by `(k, i, j)`.
    pub s2_triples: Vec<Triple>,
}

impl CouplingGraph {
    pub fn dim(&self) -> usize {
        self.neighbors.len()
    }

    pub fn is_coupled(&self, i: usize, j: usize) -> bool {
        self.neighbors[i]
            .binary_search_by_key(&j, |&(n, _)| n)
            .is_ok()
    }

    /// `(|g_i|, mean of V_ij over g_i)`; the mean is `None` for isolated `i`.
    pub fn local_stats(&self, i: usize) -> (usize, Option<f64>) {
        let g = &self.neighbors[i];
        if g.is_empty() {
            (0, None)
        } else {
            let sum: f64 = g.iter().map(|&(_, v)| v).sum();
            (g.len(), Some(sum / g.len() as f64))
        }
    }
}

pub fn build_graph(v: &SymmetricSparse) -> CouplingGraph {
    let n = v.dim();
    let mut neighbors: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for e in v.entries() {
        neighbors[e.row].push((e.col, e.value));
        neighbors[e.col].push((e.row, e.value));
    }
    for g in &mut neighbors {
        g.sort_by_key(|&(j, _)| j);
    }
    let s1 = neighbors
        .iter()
        .enumerate()
        .flat_map(|(i, g)| g.iter().map(move |&(j, value)| Link { i, j, value }))
        .collect();

    let adjacent = |i: usize, j: usize| neighbors[i].binary_search_by_key(&j, |&(n, _)| n).is_ok();
    let s2_triples = (0..n)
        .into_par_iter()
        .flat_map_iter(|k| {
            let g = &neighbors[k];
            let mut out = Vec::new();
            for &(i, vki) in g {
                for &(j, vkj) in g {
                    if i != j && !adjacent(i, j) {
                        out.push(Triple {
                            i,
                            k,
                            j,
                            weight: vki * vkj,
                        });
                    }
                }
            }
            out
        })
        .collect();

    CouplingGraph {
        neighbors,
        s1,
        s2_triples,
    }
}

/// Global coupling averages. Means over empty sets are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingStats {
    /// Mean `|g_i|` over all basis states.
    pub n_bar: f64,
    /// Mean of stored `V_ij`, each unordered pair once.
    pub v_bar: Option<f64>,
    pub v2_bar: Option<f64>,
    pub vabs_bar: Option<f64>,
    /// Mean of `V_ki V_kj` over the two-step triples.
    pub w_bar: Option<f64>,
    pub n_plus: f64,
    pub n_minus: f64,
    pub v_plus: Option<f64>,
    pub v_minus: Option<f64>,
}

fn mean(sum: f64, count: usize) -> Option<f64> {
    (count > 0).then(|| sum / count as f64)
}

pub fn compute_stats(v: &SymmetricSparse, g: &CouplingGraph) -> CouplingStats {
    let dim = v.dim().max(1) as f64;
    let entries = v.entries();
    let (mut sum, mut sum2, mut sum_abs) = (0.0, 0.0, 0.0);
    let (mut pos_sum, mut pos_n, mut neg_sum, mut neg_n) = (0.0, 0usize, 0.0, 0usize);
    for e in entries {
        sum += e.value;
        sum2 += e.value * e.value;
        sum_abs += e.value.abs();
        if e.value > 0.0 {
            pos_sum += e.value;
            pos_n += 1;
        } else {
            neg_sum += e.value;
            neg_n += 1;
        }
    }
    let w_sum: f64 = g.s2_triples.iter().map(|t| t.weight).sum();
    CouplingStats {
        n_bar: g.s1.len() as f64 / dim,
        v_bar: mean(sum, entries.len()),
        v2_bar: mean(sum2, entries.len()),
        vabs_bar: mean(sum_abs, entries.len()),
        w_bar: mean(w_sum, g.s2_triples.len()),
        // each unordered entry contributes one partner to both ends
        n_plus: 2.0 * pos_n as f64 / dim,
        n_minus: 2.0 * neg_n as f64 / dim,
        v_plus: mean(pos_sum, pos_n),
        v_minus: mean(neg_sum, neg_n),
    }
}
