//! Time evolution from the spectral decomposition (`ħ = 1`).
//!
//! For an initial basis state `i`:
//!
//! * `F_ij(t) = Σ_α e^{−iE_α t} C_{αj} C_{αi}`
//! * `F_i(t) = Σ_{j∈g_i} |F_ij(t)|²`, the probability carried into
//!   directly coupled states
//! * `s_i(t) = Σ_α |C_{αi}|² e^{iε_{αi} t}` with `ε_{αi} = E⁰_i − E_α`
//! * `F̂_i(t) = |ds_i/dt|² / (N V̄²)`, the estimate of `F_i` from the
//!   survival amplitude alone

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coupling::{CouplingGraph, CouplingStats};
use crate::error::{Error, Result};
use crate::spectral::SpectralData;

/// Default time unit numerator: `τ = TAU_SCALE / d`.
pub const TAU_SCALE: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub tau: f64,
    pub points: Vec<f64>,
}

impl TimeGrid {
    /// `steps + 1` equally spaced points from `0` to `t_max_over_tau · τ`,
    /// with `τ = 10⁻³ / d`.
    pub fn from_spacing(d: f64, t_max_over_tau: f64, steps: usize) -> Result<Self> {
        if !(d > 0.0 && d.is_finite()) {
            return Err(Error::DegenerateStats(format!(
                "mean level spacing must be positive, got {d}"
            )));
        }
        if steps == 0 || !(t_max_over_tau >= 0.0) {
            return Err(Error::ConfigInvalid {
                field: "dynamics".into(),
                reason: "need steps ≥ 1 and t_max_over_tau ≥ 0".into(),
            });
        }
        let tau = TAU_SCALE / d;
        let points = (0..=steps)
            .map(|k| k as f64 * t_max_over_tau / steps as f64 * tau)
            .collect();
        Ok(Self { tau, points })
    }
}

fn check_index(s: &SpectralData, i: usize) -> Result<()> {
    if i < s.dim() {
        Ok(())
    } else {
        Err(Error::IndexOutOfRange { index: i, dim: s.dim() })
    }
}

/// `F_ij(t)` at each time.
pub fn transition_amplitude(
    s: &SpectralData,
    i: usize,
    j: usize,
    times: &[f64],
) -> Result<Vec<Complex64>> {
    check_index(s, i)?;
    check_index(s, j)?;
    let weights: Vec<(f64, f64)> = (0..s.dim())
        .map(|a| (s.energies[a], s.c(a, i) * s.c(a, j)))
        .collect();
    Ok(times
        .par_iter()
        .map(|&t| {
            weights
                .iter()
                .map(|&(e, w)| Complex64::from_polar(w, -e * t))
                .sum()
        })
        .collect())
}

/// `F_i(t) = Σ_{j∈g_i} |F_ij(t)|²`.
pub fn transition_probability(
    s: &SpectralData,
    i: usize,
    g: &CouplingGraph,
    times: &[f64],
) -> Result<Vec<f64>> {
    check_index(s, i)?;
    let partners = &g.neighbors[i];
    if partners.is_empty() {
        return Err(Error::IsolatedState(i));
    }
    let n = s.dim();
    // weights[α][p] = C_{αi} C_{α j_p}
    let weights: Vec<f64> = (0..n)
        .flat_map(|a| {
            let ci = s.c(a, i);
            partners.iter().map(move |&(j, _)| ci * s.c(a, j))
        })
        .collect();
    let m = partners.len();
    Ok(times
        .par_iter()
        .map(|&t| {
            let mut amp = vec![Complex64::new(0.0, 0.0); m];
            for a in 0..n {
                let phase = Complex64::from_polar(1.0, -s.energies[a] * t);
                for (f, w) in amp.iter_mut().zip(&weights[a * m..(a + 1) * m]) {
                    *f += phase * w;
                }
            }
            amp.iter().map(Complex64::norm_sqr).sum()
        })
        .collect())
}

/// Survival amplitude `s_i(t)` and its exact time derivative.
pub fn survival(
    s: &SpectralData,
    i: usize,
    times: &[f64],
) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    check_index(s, i)?;
    let terms: Vec<(f64, f64)> = (0..s.dim())
        .map(|a| (s.e0[i] - s.energies[a], s.c(a, i).powi(2)))
        .collect();
    Ok(times
        .par_iter()
        .map(|&t| {
            let mut amp = Complex64::new(0.0, 0.0);
            let mut deriv = Complex64::new(0.0, 0.0);
            for &(eps, p) in &terms {
                let phase = Complex64::from_polar(1.0, eps * t);
                amp += phase * p;
                deriv += phase * (eps * p);
            }
            (amp, Complex64::i() * deriv)
        })
        .unzip())
}

/// `|ds_i/dt|² / (N_i V̄_i²)` with the partner count and mean coupling of `i`.
pub fn predict_transition(
    s: &SpectralData,
    i: usize,
    g: &CouplingGraph,
    times: &[f64],
) -> Result<Vec<f64>> {
    check_index(s, i)?;
    let (count, mean) = g.local_stats(i);
    let mean = mean.ok_or(Error::IsolatedState(i))?;
    prediction_with_scale(s, i, count as f64 * mean * mean, times)
}

/// Same estimate with the global `N̄` and `V̄`.
pub fn predict_transition_global(
    s: &SpectralData,
    i: usize,
    stats: &CouplingStats,
    times: &[f64],
) -> Result<Vec<f64>> {
    check_index(s, i)?;
    let v = stats.v_bar.unwrap_or(0.0);
    prediction_with_scale(s, i, stats.n_bar * v * v, times)
}

fn prediction_with_scale(s: &SpectralData, i: usize, scale: f64, times: &[f64]) -> Result<Vec<f64>> {
    if scale == 0.0 || !scale.is_finite() {
        return Err(Error::DegenerateStats(format!(
            "N·V̄² = {scale} for initial state {i}"
        )));
    }
    let (_, deriv) = survival(s, i, times)?;
    Ok(deriv.iter().map(|d| d.norm_sqr() / scale).collect())
}

/// `max_t |Σ_j |F_ij(t)|² − 1|` over all basis states `j`.
pub fn unitarity_error(s: &SpectralData, i: usize, times: &[f64]) -> Result<f64> {
    check_index(s, i)?;
    let n = s.dim();
    Ok(times
        .par_iter()
        .map(|&t| {
            let mut re = vec![0.0; n];
            let mut im = vec![0.0; n];
            for a in 0..n {
                let ci = s.c(a, i);
                if ci == 0.0 {
                    continue;
                }
                let (sin, cos) = (-s.energies[a] * t).sin_cos();
                let (ar, ai) = (cos * ci, sin * ci);
                for ((r, m), &c) in re.iter_mut().zip(im.iter_mut()).zip(s.row(a)) {
                    *r += ar * c;
                    *m += ai * c;
                }
            }
            let total: f64 = re.iter().zip(&im).map(|(r, m)| r * r + m * m).sum();
            (total - 1.0).abs()
        })
        .reduce(|| 0.0, f64::max))
}

/// Basis state at the middle of the energy-sorted unperturbed spectrum
/// (ties broken by index). If it has no coupling partners, the nearest
/// coupled state in that order is used instead.
pub fn median_initial_state(e0: &[f64], g: &CouplingGraph) -> Result<usize> {
    let mut order: Vec<usize> = (0..e0.len()).collect();
    order.sort_by(|&a, &b| e0[a].total_cmp(&e0[b]).then(a.cmp(&b)));
    let mid = order.len() / 2;
    (0..order.len())
        .flat_map(|off| [mid.checked_add(off), mid.checked_sub(off)])
        .flatten()
        .filter(|&p| p < order.len())
        .map(|p| order[p])
        .find(|&i| !g.neighbors[i].is_empty())
        .ok_or(Error::NoPairs("every basis state is isolated"))
}

#[derive(Debug, Clone)]
pub struct DynamicsResult {
    pub initial_index: usize,
    pub times: TimeGrid,
    pub f_i: Vec<f64>,
    pub survival: Vec<Complex64>,
    pub derivative: Vec<Complex64>,
    /// Local-statistics estimate.
    pub predicted: Vec<f64>,
    /// Global-statistics estimate, when `N̄ V̄² ≠ 0`.
    pub predicted_global: Option<Vec<f64>>,
}

pub fn run(
    s: &SpectralData,
    g: &CouplingGraph,
    stats: &CouplingStats,
    initial_index: usize,
    times: TimeGrid,
) -> Result<DynamicsResult> {
    let f_i = transition_probability(s, initial_index, g, &times.points)?;
    let (surv, derivative) = survival(s, initial_index, &times.points)?;
    let (count, mean) = g.local_stats(initial_index);
    let mean = mean.ok_or(Error::IsolatedState(initial_index))?;
    let scale = count as f64 * mean * mean;
    if scale == 0.0 {
        return Err(Error::DegenerateStats(format!(
            "local mean coupling vanishes for state {initial_index}"
        )));
    }
    let predicted = derivative.iter().map(|d| d.norm_sqr() / scale).collect();
    let global_scale = stats.n_bar * stats.v_bar.unwrap_or(0.0).powi(2);
    let predicted_global = (global_scale != 0.0)
        .then(|| derivative.iter().map(|d| d.norm_sqr() / global_scale).collect());
    Ok(DynamicsResult {
        initial_index,
        times,
        f_i,
        survival: surv,
        derivative,
        predicted,
        predicted_global,
    })
}

/// `‖a − b‖₂ / ‖a‖₂`.
pub fn relative_l2(reference: &[f64], estimate: &[f64]) -> f64 {
    let num: f64 = reference
        .iter()
        .zip(estimate)
        .map(|(a, b)| (a - b).powi(2))
        .sum();
    let den: f64 = reference.iter().map(|a| a * a).sum();
    (num / den).sqrt()
}
