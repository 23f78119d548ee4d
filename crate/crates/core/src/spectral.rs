//! Full eigendecomposition of `H = diag(E⁰) + V` and eigenstate windows.

use rayon::prelude::*;

use crate::eigen;
use crate::error::{Error, Result};
use crate::model::HamiltonianPair;

/// Eigenvalues in ascending order together with the expansion
/// coefficients `C_{αi} = ⟨E⁰_i|E_α⟩`.
#[derive(Debug, Clone)]
pub struct SpectralData {
    pub energies: Vec<f64>,
    /// Row-major `dim × dim`; row `α` is the eigenvector of `energies[α]`.
    pub components: Vec<f64>,
    pub e0: Vec<f64>,
    /// Index of the decoupled block (connected component of `V`, ordered by
    /// smallest basis index) that holds each eigenstate.
    pub sector: Vec<usize>,
}

impl SpectralData {
    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn row(&self, alpha: usize) -> &[f64] {
        let n = self.dim();
        &self.components[alpha * n..(alpha + 1) * n]
    }

    #[inline]
    pub fn c(&self, alpha: usize, i: usize) -> f64 {
        self.components[alpha * self.dim() + i]
    }

    /// `max |Σ_i C_{αi} C_{βi} − δ_{αβ}|` over all pairs of eigenvectors.
    pub fn orthonormality_error(&self) -> f64 {
        let n = self.dim();
        (0..n)
            .into_par_iter()
            .map(|a| {
                let ra = self.row(a);
                (a..n)
                    .map(|b| {
                        let s: f64 = ra.iter().zip(self.row(b)).map(|(x, y)| x * y).sum();
                        let target = if a == b { 1.0 } else { 0.0 };
                        (s - target).abs()
                    })
                    .fold(0.0, f64::max)
            })
            .reduce(|| 0.0, f64::max)
    }

    /// `max_α ‖H c_α − E_α c_α‖₂`.
    pub fn max_residual(&self, h: &HamiltonianPair) -> f64 {
        (0..self.dim())
            .into_par_iter()
            .map(|a| {
                let c = self.row(a);
                let vc = h.v.mul_vec(c);
                c.iter()
                    .zip(&vc)
                    .zip(&h.e0)
                    .map(|((ci, vci), e)| {
                        let r = e * ci + vci - self.energies[a] * ci;
                        r * r
                    })
                    .sum::<f64>()
                    .sqrt()
            })
            .reduce(|| 0.0, f64::max)
    }

    /// Sorted energies of each decoupled block.
    pub fn sector_levels(&self) -> Vec<Vec<f64>> {
        let count = self.sector.iter().max().map_or(0, |m| m + 1);
        let mut out = vec![Vec::new(); count];
        for (&b, &e) in self.sector.iter().zip(&self.energies) {
            out[b].push(e);
        }
        out
    }

    pub fn spectral_range(&self) -> f64 {
        match (self.energies.first(), self.energies.last()) {
            (Some(lo), Some(hi)) => hi - lo,
            _ => 0.0,
        }
    }
}

/// Diagonalizes `H` block by block over the connected components of the
/// coupling graph of `V` (`H` is exactly block diagonal there) and merges
/// the spectra in ascending order. Each eigenvector is normalized so that
/// its largest-magnitude component is positive.
pub fn diagonalize(h: &HamiltonianPair) -> Result<SpectralData> {
    let n = h.dim();
    if n == 0 {
        return Err(Error::InvalidModel {
            field: "dim",
            reason: "cannot diagonalize an empty Hamiltonian".into(),
        });
    }
    let blocks = h.v.connected_components();
    let mut local = vec![0usize; n];
    for block in &blocks {
        for (p, &i) in block.iter().enumerate() {
            local[i] = p;
        }
    }

    let mut solved = Vec::with_capacity(blocks.len());
    for block in &blocks {
        let m = block.len();
        let mut a = vec![0.0; m * m];
        for (p, &i) in block.iter().enumerate() {
            a[p * m + p] = h.e0[i];
        }
        solved.push((m, a));
    }
    let mut block_of = vec![0usize; n];
    for (b, block) in blocks.iter().enumerate() {
        for &i in block {
            block_of[i] = b;
        }
    }
    for e in h.v.entries() {
        let b = block_of[e.row];
        let (m, a) = &mut solved[b];
        let (p, q) = (local[e.row], local[e.col]);
        a[p * *m + q] = e.value;
        a[q * *m + p] = e.value;
    }
    let eigs = solved
        .into_iter()
        .map(|(m, a)| {
            if m == 1 {
                Ok(eigen::Eigen {
                    values: vec![a[0]],
                    vectors: vec![1.0],
                })
            } else {
                eigen::symmetric_eigen(a, m)
            }
        })
        .collect::<Result<Vec<_>>>()?;

    let mut order: Vec<(usize, usize)> = eigs
        .iter()
        .enumerate()
        .flat_map(|(b, eig)| (0..eig.values.len()).map(move |k| (b, k)))
        .collect();
    order.sort_by(|x, y| eigs[x.0].values[x.1].total_cmp(&eigs[y.0].values[y.1]));

    let energies: Vec<f64> = order.iter().map(|&(b, k)| eigs[b].values[k]).collect();
    let mut components = vec![0.0; n * n];
    components
        .par_chunks_mut(n)
        .zip(order.par_iter())
        .for_each(|(row, &(b, k))| {
            let m = blocks[b].len();
            let vecs = &eigs[b].vectors;
            for (p, &i) in blocks[b].iter().enumerate() {
                row[i] = vecs[p * m + k];
            }
            fix_sign(row);
        });

    Ok(SpectralData {
        energies,
        components,
        e0: h.e0.clone(),
        sector: order.iter().map(|&(b, _)| b).collect(),
    })
}

/// Flips `v` so that its first largest-magnitude component is positive.
fn fix_sign(v: &mut [f64]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v[best] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Contiguous run of eigenstate indices with its mean level spacing.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyWindow {
    pub alpha_indices: Vec<usize>,
    pub d: f64,
}

impl EnergyWindow {
    pub fn len(&self) -> usize {
        self.alpha_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha_indices.is_empty()
    }

    /// Energies of the first and last eigenstate in the window.
    pub fn energy_range(&self, s: &SpectralData) -> (f64, f64) {
        let first = self.alpha_indices[0];
        let last = *self.alpha_indices.last().unwrap();
        (s.energies[first], s.energies[last])
    }
}

/// `count` eigenstates centered on index `dim / 2`, ties toward lower index.
pub fn select_window(s: &SpectralData, count: usize) -> Result<EnergyWindow> {
    let dim = s.dim();
    if count < 2 || count > dim {
        return Err(Error::WindowOutOfRange { count, dim });
    }
    let start = (dim / 2).saturating_sub(count / 2).min(dim - count);
    let alpha_indices: Vec<usize> = (start..start + count).collect();
    let d = (s.energies[start + count - 1] - s.energies[start]) / (count - 1) as f64;
    Ok(EnergyWindow { alpha_indices, d })
}
