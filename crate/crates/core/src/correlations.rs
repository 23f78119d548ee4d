//! Energy-resolved averages over eigenfunction components.
//!
//! Every estimator samples, for each eigenstate `α` of a window, some
//! product of components and files it in the bin of an energy difference
//! `ε = E⁰_l − E_α`. The averaged shape `Π(ε) = ⟨|C_{αi}|²⟩` sets the scale:
//! correlation functions are bin means divided by the `Π` bin mean.
//!
//! | estimator        | samples                       | binned at     |
//! |------------------|-------------------------------|---------------|
//! | [`ef_shape`]     | `C_{αi}²`, all `i`            | `E⁰_i − E_α`  |
//! | [`corr1`]        | `C_{αi}C_{αj}`, `(i,j) ∈ S₁`  | `E⁰_i − E_α`  |
//! | [`corr2`]        | `C_{αi}C_{αj}`, `i→k→j`       | `E⁰_k − E_α`  |
//! | [`corr_sign`]    | `sgn(C_{αi}C_{αj}) sgn(V_ij)` | `E⁰_i − E_α`  |
//! | [`corr_all_pairs`] | `C_{αi}C_{αj}`, any `i ≠ j` | `E⁰_i − E_α`  |
//!
//! All estimators are bilinear in the components of a single eigenstate,
//! so they do not depend on eigenvector sign conventions.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coupling::{CouplingGraph, CouplingStats};
use crate::error::{Error, Result};
use crate::spectral::{EnergyWindow, SpectralData};

/// Default number of bins for automatically sized grids.
pub const DEFAULT_BINS: usize = 81;

/// Fraction of the window's eigenfunction weight covered by an automatic grid.
pub const AUTO_GRID_WEIGHT: f64 = 0.999;

/// Bins with `Π ≥ CENTRAL_FRACTION · max Π` form the central region.
pub const CENTRAL_FRACTION: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BinGrid {
    pub eps_min: f64,
    pub eps_max: f64,
    pub n_bins: usize,
}

impl BinGrid {
    pub fn new(eps_min: f64, eps_max: f64, n_bins: usize) -> Result<Self> {
        let grid = Self {
            eps_min,
            eps_max,
            n_bins,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps_min.is_finite() && self.eps_max.is_finite()) || self.eps_min >= self.eps_max
        {
            return Err(Error::InvalidGrid(format!(
                "need finite eps_min < eps_max, got [{}, {}]",
                self.eps_min, self.eps_max
            )));
        }
        if self.n_bins < 1 {
            return Err(Error::InvalidGrid("n_bins must be at least 1".into()));
        }
        Ok(())
    }

    pub fn width(&self) -> f64 {
        (self.eps_max - self.eps_min) / self.n_bins as f64
    }

    pub fn center(&self, k: usize) -> f64 {
        self.eps_min + (k as f64 + 0.5) * self.width()
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.n_bins).map(|k| self.center(k)).collect()
    }

    /// Bin holding `eps`; the upper edge belongs to the last bin.
    #[inline]
    pub fn index(&self, eps: f64) -> Option<usize> {
        if !(eps >= self.eps_min && eps <= self.eps_max) {
            return None;
        }
        let k = ((eps - self.eps_min) / self.width()) as usize;
        Some(k.min(self.n_bins - 1))
    }
}

/// Symmetric grid `[-W, W]` where `W` is the smallest `|ε|` bound that
/// holds [`AUTO_GRID_WEIGHT`] of the window's total `Σ C_{αi}²`.
pub fn auto_grid(s: &SpectralData, w: &EnergyWindow, n_bins: usize) -> Result<BinGrid> {
    let mut samples: Vec<(f64, f64)> = w
        .alpha_indices
        .iter()
        .flat_map(|&a| {
            let e = s.energies[a];
            s.row(a)
                .iter()
                .zip(&s.e0)
                .map(move |(c, e0)| ((e0 - e).abs(), c * c))
        })
        .collect();
    samples.sort_by(|x, y| x.0.total_cmp(&y.0));
    let total: f64 = samples.iter().map(|x| x.1).sum();
    let mut acc = 0.0;
    let mut half = 0.0;
    for (eps, weight) in samples {
        acc += weight;
        half = eps;
        if acc >= AUTO_GRID_WEIGHT * total {
            break;
        }
    }
    if half <= 0.0 {
        half = s.spectral_range().max(1.0) * 1e-6;
    }
    // pad so the outermost sample is not on the edge
    BinGrid::new(-half * 1.0001, half * 1.0001, n_bins)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinnedStatistic {
    pub centers: Vec<f64>,
    /// `None` where no sample (or no valid normalization) is available.
    pub mean: Vec<Option<f64>>,
    pub count: Vec<usize>,
}

impl BinnedStatistic {
    pub fn is_empty(&self) -> bool {
        self.count.iter().all(|&c| c == 0)
    }

    pub fn total_count(&self) -> usize {
        self.count.iter().sum()
    }

    /// Bins whose `mean` is present and whose center passes `keep`.
    pub fn points(&self, mut keep: impl FnMut(usize) -> bool) -> (Vec<f64>, Vec<f64>) {
        self.centers
            .iter()
            .zip(&self.mean)
            .enumerate()
            .filter_map(|(k, (&x, m))| m.filter(|_| keep(k)).map(|y| (x, y)))
            .unzip()
    }
}

/// A prediction evaluated on the bin centers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub centers: Vec<f64>,
    pub value: Vec<Option<f64>>,
}

#[derive(Debug, Clone)]
struct Acc {
    sum: Vec<f64>,
    count: Vec<usize>,
}

impl Acc {
    fn new(n: usize) -> Self {
        Self {
            sum: vec![0.0; n],
            count: vec![0; n],
        }
    }

    #[inline]
    fn add(&mut self, k: usize, x: f64) {
        self.sum[k] += x;
        self.count[k] += 1;
    }

    fn merge(mut self, other: &Acc) -> Self {
        for k in 0..self.sum.len() {
            self.sum[k] += other.sum[k];
            self.count[k] += other.count[k];
        }
        self
    }

    fn means(&self, grid: &BinGrid) -> BinnedStatistic {
        BinnedStatistic {
            centers: grid.centers(),
            mean: self
                .sum
                .iter()
                .zip(&self.count)
                .map(|(s, &c)| (c > 0).then(|| s / c as f64))
                .collect(),
            count: self.count.clone(),
        }
    }

    /// Bin means divided by the matching `Π` means.
    fn normalized(&self, grid: &BinGrid, pi: &BinnedStatistic) -> BinnedStatistic {
        let mut out = self.means(grid);
        for (m, p) in out.mean.iter_mut().zip(&pi.mean) {
            *m = match (*m, *p) {
                (Some(x), Some(p)) if p > 0.0 => Some(x / p),
                _ => None,
            };
        }
        out
    }
}

/// Runs `per_alpha` for each window state in parallel (one accumulator
/// set per state) and merges the results in window order.
fn accumulate<const K: usize>(
    w: &EnergyWindow,
    grid: &BinGrid,
    per_alpha: impl Fn(usize, &mut [Acc; K]) + Sync,
) -> [Acc; K] {
    let parts: Vec<[Acc; K]> = w
        .alpha_indices
        .par_iter()
        .map(|&a| {
            let mut accs: [Acc; K] = std::array::from_fn(|_| Acc::new(grid.n_bins));
            per_alpha(a, &mut accs);
            accs
        })
        .collect();
    let init: [Acc; K] = std::array::from_fn(|_| Acc::new(grid.n_bins));
    parts.iter().fold(init, |total, part| {
        let mut k = 0;
        total.map(|acc| {
            let merged = acc.merge(&part[k]);
            k += 1;
            merged
        })
    })
}

#[inline]
fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Averaged eigenfunction shape `Π(ε)`.
pub fn ef_shape(s: &SpectralData, w: &EnergyWindow, grid: &BinGrid) -> BinnedStatistic {
    let [acc] = accumulate::<1>(w, grid, |a, [acc]| {
        let e = s.energies[a];
        for (c, e0) in s.row(a).iter().zip(&s.e0) {
            if let Some(k) = grid.index(e0 - e) {
                acc.add(k, c * c);
            }
        }
    });
    acc.means(grid)
}

fn require_s1(g: &CouplingGraph) -> Result<()> {
    if g.s1.is_empty() {
        Err(Error::NoPairs("perturbation has no stored entries"))
    } else {
        Ok(())
    }
}

/// First-order correlation function over `S₁`.
pub fn corr1(
    s: &SpectralData,
    w: &EnergyWindow,
    g: &CouplingGraph,
    grid: &BinGrid,
) -> Result<BinnedStatistic> {
    require_s1(g)?;
    let pi = ef_shape(s, w, grid);
    let [acc] = accumulate::<1>(w, grid, |a, [acc]| {
        let e = s.energies[a];
        let row = s.row(a);
        for link in &g.s1 {
            if let Some(k) = grid.index(s.e0[link.i] - e) {
                acc.add(k, row[link.i] * row[link.j]);
            }
        }
    });
    Ok(acc.normalized(grid, &pi))
}

#[derive(Debug, Clone)]
pub struct SecondOrder {
    pub c2: BinnedStatistic,
    /// `Π_d(ε)`: mean `C_{αi}²` over triples, binned at the intermediate state.
    pub pi_d: BinnedStatistic,
    /// `Π_d / Π` per bin.
    pub eta: BinnedStatistic,
}

/// Second-order correlation function over two-step triples `i → k → j`,
/// each triple binned once at `ε = E⁰_k − E_α`.
pub fn corr2(
    s: &SpectralData,
    w: &EnergyWindow,
    g: &CouplingGraph,
    grid: &BinGrid,
) -> Result<SecondOrder> {
    if g.s2_triples.is_empty() {
        return Err(Error::NoPairs("no two-step pathways"));
    }
    let pi = ef_shape(s, w, grid);
    let [c2, pi_d] = accumulate::<2>(w, grid, |a, [c2, pi_d]| {
        let e = s.energies[a];
        let row = s.row(a);
        let mut current = usize::MAX;
        let mut bin = None;
        for t in &g.s2_triples {
            if t.k != current {
                current = t.k;
                bin = grid.index(s.e0[t.k] - e);
            }
            if let Some(k) = bin {
                let ci = row[t.i];
                c2.add(k, ci * row[t.j]);
                pi_d.add(k, ci * ci);
            }
        }
    });
    Ok(SecondOrder {
        c2: c2.normalized(grid, &pi),
        pi_d: pi_d.means(grid),
        eta: pi_d.normalized(grid, &pi),
    })
}

#[derive(Debug, Clone)]
pub struct SignedFirstOrder {
    pub plus: BinnedStatistic,
    pub minus: BinnedStatistic,
    /// Samples weighted by `sgn(V_ij)`.
    pub weighted: BinnedStatistic,
}

/// First-order correlations split by the sign of `V_ij`.
pub fn corr1_signed(
    s: &SpectralData,
    w: &EnergyWindow,
    g: &CouplingGraph,
    grid: &BinGrid,
) -> Result<SignedFirstOrder> {
    require_s1(g)?;
    let pi = ef_shape(s, w, grid);
    let [plus, minus, weighted] = accumulate::<3>(w, grid, |a, [plus, minus, weighted]| {
        let e = s.energies[a];
        let row = s.row(a);
        for link in &g.s1 {
            if let Some(k) = grid.index(s.e0[link.i] - e) {
                let x = row[link.i] * row[link.j];
                if link.value > 0.0 {
                    plus.add(k, x);
                } else {
                    minus.add(k, x);
                }
                weighted.add(k, sgn(link.value) * x);
            }
        }
    });
    Ok(SignedFirstOrder {
        plus: plus.normalized(grid, &pi),
        minus: minus.normalized(grid, &pi),
        weighted: weighted.normalized(grid, &pi),
    })
}

/// Mean of `sgn(C_{αi}C_{αj})·sgn(V_ij)` over `S₁`; not divided by `Π`.
pub fn corr_sign(
    s: &SpectralData,
    w: &EnergyWindow,
    g: &CouplingGraph,
    grid: &BinGrid,
) -> Result<BinnedStatistic> {
    require_s1(g)?;
    let [acc] = accumulate::<1>(w, grid, |a, [acc]| {
        let e = s.energies[a];
        let row = s.row(a);
        for link in &g.s1 {
            if let Some(k) = grid.index(s.e0[link.i] - e) {
                acc.add(k, sgn(row[link.i] * row[link.j]) * sgn(link.value));
            }
        }
    });
    Ok(acc.means(grid))
}

/// Correlation over ordered pairs `i ≠ j` regardless of coupling. When
/// `sample_cap` is below the number of pairs, a seeded uniform subsample
/// of that size (shared by all window states) is used.
pub fn corr_all_pairs(
    s: &SpectralData,
    w: &EnergyWindow,
    grid: &BinGrid,
    sample_cap: usize,
    seed: u64,
) -> Result<BinnedStatistic> {
    let dim = s.dim();
    if dim < 2 {
        return Err(Error::NoPairs("need at least two basis states"));
    }
    let total = dim * (dim - 1);
    let pair_of = |p: usize| {
        let i = p / (dim - 1);
        let r = p % (dim - 1);
        (i, if r >= i { r + 1 } else { r })
    };
    let pi = ef_shape(s, w, grid);
    let [acc] = if sample_cap >= total {
        accumulate::<1>(w, grid, |a, [acc]| {
            let e = s.energies[a];
            let row = s.row(a);
            let row_sum: f64 = row.iter().sum();
            for i in 0..dim {
                let Some(k) = grid.index(s.e0[i] - e) else {
                    continue;
                };
                let ci = row[i];
                // Σ_{j≠i} C_i C_j in closed form
                acc.sum[k] += ci * (row_sum - ci);
                acc.count[k] += dim - 1;
            }
        })
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pairs: Vec<(usize, usize)> = rand::seq::index::sample(&mut rng, total, sample_cap)
            .into_iter()
            .map(pair_of)
            .collect();
        pairs.sort_unstable();
        accumulate::<1>(w, grid, |a, [acc]| {
            let e = s.energies[a];
            let row = s.row(a);
            for &(i, j) in &pairs {
                if let Some(k) = grid.index(s.e0[i] - e) {
                    acc.add(k, row[i] * row[j]);
                }
            }
        })
    };
    Ok(acc.normalized(grid, &pi))
}

/// `C₁(ε) ≈ −ε / (V̄ N̄)`.
pub fn predict_c1(stats: &CouplingStats, grid: &BinGrid) -> Result<Curve> {
    let scale = stats.v_bar.unwrap_or(0.0) * stats.n_bar;
    linear_prediction(scale, grid)
}

/// Sign-weighted law `C̃₁(ε) ≈ −ε / (|V|‾ N̄)`.
pub fn predict_c1_weighted(stats: &CouplingStats, grid: &BinGrid) -> Result<Curve> {
    let scale = stats.vabs_bar.unwrap_or(0.0) * stats.n_bar;
    linear_prediction(scale, grid)
}

fn linear_prediction(scale: f64, grid: &BinGrid) -> Result<Curve> {
    if scale == 0.0 || !scale.is_finite() {
        return Err(Error::DegenerateStats(format!(
            "mean coupling times mean partner count is {scale}"
        )));
    }
    let centers = grid.centers();
    let value = centers.iter().map(|&x| Some(-x / scale)).collect();
    Ok(Curve { centers, value })
}

/// `C₂(ε) ≈ (ε² − V̄² N̄ η(ε)) / (W̄ N̄ (N̄ − 1))` with the per-bin `η`.
pub fn predict_c2(stats: &CouplingStats, eta: &BinnedStatistic, grid: &BinGrid) -> Result<Curve> {
    let n = stats.n_bar;
    let w_bar = stats.w_bar.unwrap_or(0.0);
    if n <= 1.0 || w_bar == 0.0 {
        return Err(Error::DegenerateStats(format!(
            "second-order law needs N̄ > 1 and W̄ ≠ 0 (N̄ = {n}, W̄ = {w_bar})"
        )));
    }
    let v2 = stats.v2_bar.unwrap_or(0.0);
    let denom = w_bar * n * (n - 1.0);
    let centers = grid.centers();
    let value = centers
        .iter()
        .zip(&eta.mean)
        .map(|(&x, e)| e.map(|e| (x * x - v2 * n * e) / denom))
        .collect();
    Ok(Curve { centers, value })
}

/// Central-region mask: `Π ≥ CENTRAL_FRACTION · max Π`.
pub fn central_region(pi: &BinnedStatistic) -> Vec<bool> {
    let max = pi
        .mean
        .iter()
        .flatten()
        .fold(0.0_f64, |m, &x| m.max(x));
    pi.mean
        .iter()
        .map(|m| m.is_some_and(|x| max > 0.0 && x >= CENTRAL_FRACTION * max))
        .collect()
}

/// Mean of `η` over central bins.
pub fn central_eta(eta: &BinnedStatistic, central: &[bool]) -> Option<f64> {
    let vals: Vec<f64> = eta
        .mean
        .iter()
        .zip(central)
        .filter_map(|(m, &c)| m.filter(|_| c))
        .collect();
    (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
}
