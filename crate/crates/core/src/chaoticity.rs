//! Level-statistics diagnostics: consecutive-gap ratios and unfolded
//! nearest-neighbor spacing histograms.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit;

/// Mean gap ratio of GOE spectra.
pub const GOE_MEAN_RATIO: f64 = 0.5307;
/// Mean gap ratio of uncorrelated levels, `2 ln 2 − 1`.
pub const POISSON_MEAN_RATIO: f64 = 0.386_294_361_119_890_6;

/// Relative singular-value threshold above which a staircase fit is rejected.
pub const MAX_FIT_CONDITION: f64 = 1e10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapRatios {
    pub mean_ratio: f64,
    /// Ratios that entered the mean.
    pub count: usize,
    /// Triples with both spacings zero.
    pub skipped: usize,
}

fn ratios(levels: &[f64]) -> (Vec<f64>, usize) {
    let mut out = Vec::with_capacity(levels.len().saturating_sub(2));
    let mut skipped = 0;
    for w in levels.windows(3) {
        let (a, b) = (w[1] - w[0], w[2] - w[1]);
        let hi = a.max(b);
        if hi == 0.0 {
            skipped += 1;
        } else {
            out.push(a.min(b) / hi);
        }
    }
    (out, skipped)
}

/// Mean of `min(s_k, s_{k+1}) / max(s_k, s_{k+1})` over consecutive
/// spacings of the sorted `levels`.
pub fn gap_ratios(levels: &[f64]) -> Result<GapRatios> {
    gap_ratios_pooled(&[levels])
}

/// Gap ratios computed within each sector and pooled. Sectors with fewer
/// than three levels contribute nothing.
pub fn gap_ratios_pooled(sectors: &[&[f64]]) -> Result<GapRatios> {
    let mut all = Vec::new();
    let mut skipped = 0;
    for levels in sectors {
        let (r, s) = ratios(levels);
        all.extend(r);
        skipped += s;
    }
    if all.is_empty() {
        let got = sectors.iter().map(|s| s.len()).max().unwrap_or(0);
        return Err(Error::TooFewLevels { needed: 3, got });
    }
    Ok(GapRatios {
        mean_ratio: all.iter().sum::<f64>() / all.len() as f64,
        count: all.len(),
        skipped,
    })
}

/// The middle `fraction` of sorted `levels` (at least three when
/// available), dropping equal numbers of levels from both spectral edges.
pub fn central_levels(levels: &[f64], fraction: f64) -> &[f64] {
    let n = levels.len();
    let keep = ((n as f64 * fraction.clamp(0.0, 1.0)).round() as usize)
        .max(3)
        .min(n);
    let start = (n - keep) / 2;
    &levels[start..start + keep]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpacingHistogram {
    pub centers: Vec<f64>,
    pub width: f64,
    pub density: Vec<f64>,
    pub wigner: Vec<f64>,
    pub poisson: Vec<f64>,
    /// Unit-mean unfolded spacings.
    pub spacings: Vec<f64>,
    /// Condition number of the staircase fit.
    pub condition: f64,
}

impl SpacingHistogram {
    pub fn integral(&self) -> f64 {
        self.density.iter().sum::<f64>() * self.width
    }
}

/// Wigner surmise `P(s) = (π/2) s exp(−π s²/4)`.
pub fn wigner_surmise(s: f64) -> f64 {
    0.5 * PI * s * (-0.25 * PI * s * s).exp()
}

/// Unfolds `levels` by fitting the staircase `N(E)` with a polynomial of
/// `degree`, normalizes spacings to unit mean and histograms them on
/// `[0, max(4, s_max)]`.
pub fn unfolded_spacings(levels: &[f64], degree: usize, n_bins: usize) -> Result<SpacingHistogram> {
    unfolded_spacings_pooled(&[levels], degree, n_bins)
}

/// Per-sector unfolding with a pooled histogram.
pub fn unfolded_spacings_pooled(
    sectors: &[&[f64]],
    degree: usize,
    n_bins: usize,
) -> Result<SpacingHistogram> {
    let needed = 10.max(degree + 2);
    let mut spacings = Vec::new();
    let mut condition = 1.0_f64;
    for levels in sectors.iter().filter(|l| l.len() >= needed) {
        let (s, cond) = unfold(levels, degree)?;
        spacings.extend(s);
        condition = condition.max(cond);
    }
    if spacings.is_empty() {
        let got = sectors.iter().map(|s| s.len()).max().unwrap_or(0);
        return Err(Error::TooFewLevels { needed, got });
    }
    let mean = spacings.iter().sum::<f64>() / spacings.len() as f64;
    spacings.iter_mut().for_each(|s| *s /= mean);

    let n_bins = n_bins.max(1);
    let s_max = spacings.iter().cloned().fold(4.0_f64, f64::max);
    let width = s_max / n_bins as f64;
    let mut counts = vec![0usize; n_bins];
    for &s in &spacings {
        counts[((s / width) as usize).min(n_bins - 1)] += 1;
    }
    let norm = spacings.len() as f64 * width;
    let centers: Vec<f64> = (0..n_bins).map(|k| (k as f64 + 0.5) * width).collect();
    Ok(SpacingHistogram {
        density: counts.iter().map(|&c| c as f64 / norm).collect(),
        wigner: centers.iter().map(|&s| wigner_surmise(s)).collect(),
        poisson: centers.iter().map(|&s| (-s).exp()).collect(),
        centers,
        width,
        spacings,
        condition,
    })
}

/// Raw unfolded spacings of one sector and the fit's condition number.
fn unfold(levels: &[f64], degree: usize) -> Result<(Vec<f64>, f64)> {
    let lo = levels[0];
    let hi = levels[levels.len() - 1];
    let mid = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    if half <= 0.0 {
        return Err(Error::IllConditioned {
            condition: f64::INFINITY,
        });
    }
    let x: Vec<f64> = levels.iter().map(|e| (e - mid) / half).collect();
    let staircase: Vec<f64> = (0..levels.len()).map(|k| k as f64 + 0.5).collect();
    let condition = fit::condition_number(&x, degree);
    if !(condition <= MAX_FIT_CONDITION) {
        return Err(Error::IllConditioned { condition });
    }
    let coeffs = fit::polyfit(&x, &staircase, degree).ok_or(Error::IllConditioned { condition })?;
    let mapped: Vec<f64> = x
        .iter()
        .map(|&t| coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c))
        .collect();
    Ok((mapped.windows(2).map(|w| w[1] - w[0]).collect(), condition))
}
