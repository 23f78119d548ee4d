//! End-to-end run: build, diagonalize, analyze, write CSVs and a manifest.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::chaoticity;
use crate::config::{Analysis, GridSpec, InitialState, RunConfig};
use crate::correlations::{self, BinGrid, BinnedStatistic, DEFAULT_BINS};
use crate::coupling::{self, CouplingGraph, CouplingStats};
use crate::dynamics::{self, TimeGrid};
use crate::error::{Error, Result};
use crate::fit;
use crate::model::{self, HamiltonianPair};
use crate::output::{self, FileRecord};
use crate::spectral::{self, EnergyWindow, SpectralData};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowInfo {
    pub first: usize,
    pub last: usize,
    pub e_min: f64,
    pub e_max: f64,
    pub d: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config: RunConfig,
    pub dim: usize,
    pub sectors: usize,
    pub window: WindowInfo,
    /// Absent when no analysis reads eigenvector components.
    pub grid: Option<BinGrid>,
    pub coupling_stats: CouplingStats,
    /// Per-analysis scalar summaries.
    pub summary: BTreeMap<String, Value>,
    pub files: Vec<FileRecord>,
}

/// Everything computed before the analyses run.
pub struct Prepared {
    pub hamiltonian: HamiltonianPair,
    pub spectral: SpectralData,
    pub window: EnergyWindow,
    pub graph: CouplingGraph,
    pub stats: CouplingStats,
    /// Only built when an analysis reads eigenvector components.
    pub grid: Option<BinGrid>,
}

/// Builds the model, applies sign flips, diagonalizes and selects the window.
pub fn prepare(cfg: &RunConfig) -> Result<Prepared> {
    let (_, mut h) = model::build(&cfg.model)?;
    if let Some(flip) = &cfg.sign_flip {
        h.v = model::randomize_signs(&h.v, flip.fraction, flip.seed)?;
    }
    let s = spectral::diagonalize(&h)?;
    let window = spectral::select_window(&s, cfg.window_count)?;
    let graph = coupling::build_graph(&h.v);
    let stats = coupling::compute_stats(&h.v, &graph);
    let grid = if cfg.analyses.iter().any(|a| a.needs_components()) {
        Some(match &cfg.grid {
            GridSpec::Auto(_) => correlations::auto_grid(&s, &window, DEFAULT_BINS)?,
            GridSpec::Explicit(g) => {
                g.validate()?;
                *g
            }
        })
    } else {
        None
    };
    Ok(Prepared {
        hamiltonian: h,
        spectral: s,
        window,
        graph,
        stats,
        grid,
    })
}

/// Runs every configured analysis and writes the results into `out_dir`
/// (the configured directory when `None`).
pub fn run_pipeline(cfg: &RunConfig, out_dir: Option<&Path>) -> Result<Manifest> {
    cfg.validate()?;
    let dir: PathBuf = out_dir.map_or_else(|| cfg.output_dir.clone(), Path::to_path_buf);
    fs::create_dir_all(&dir).map_err(|source| Error::Io {
        path: dir.display().to_string(),
        source,
    })?;

    let p = prepare(cfg)?;
    let mut files = Vec::new();
    let mut summary = BTreeMap::new();
    let central = p
        .grid
        .map(|grid| {
            correlations::central_region(&correlations::ef_shape(&p.spectral, &p.window, &grid))
        })
        .unwrap_or_default();

    for analysis in cfg.analyses() {
        let (key, value) = run_analysis(cfg, &p, &central, analysis, &dir, &mut files)?;
        summary.insert(key.to_string(), value);
    }

    files.push(output::write_file(&dir, "coupling_stats.csv", &output::stats_csv(&p.stats))?);
    files.push(output::write_file(
        &dir,
        "spectrum.csv",
        &output::spectrum_csv(&p.spectral.energies),
    )?);

    let (e_min, e_max) = p.window.energy_range(&p.spectral);
    let manifest = Manifest {
        config: cfg.clone(),
        dim: p.spectral.dim(),
        sectors: p.spectral.sector_levels().len(),
        window: WindowInfo {
            first: p.window.alpha_indices[0],
            last: *p.window.alpha_indices.last().unwrap(),
            e_min,
            e_max,
            d: p.window.d,
        },
        grid: p.grid,
        coupling_stats: p.stats.clone(),
        summary,
        files,
    };
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    output::write_file(&dir, "manifest.json", &text)?;
    Ok(manifest)
}

fn run_analysis(
    cfg: &RunConfig,
    p: &Prepared,
    central: &[bool],
    analysis: Analysis,
    dir: &Path,
    files: &mut Vec<FileRecord>,
) -> Result<(&'static str, Value)> {
    let (s, w, g, stats) = (&p.spectral, &p.window, &p.graph, &p.stats);
    let mut write = |name: &str, body: String| -> Result<()> {
        files.push(output::write_file(dir, name, &body)?);
        Ok(())
    };
    if analysis == Analysis::Spacings {
        let sp = &cfg.spacings;
        let sectors = s.sector_levels();
        let central_sectors: Vec<&[f64]> = sectors
            .iter()
            .map(|l| chaoticity::central_levels(l, sp.window_fraction))
            .collect();
        let ratios = chaoticity::gap_ratios_pooled(&central_sectors)?;
        let hist =
            chaoticity::unfolded_spacings_pooled(&central_sectors, sp.poly_degree, sp.n_bins)?;
        write("spacings.csv", output::spacing_csv(&hist))?;
        write(
            "spacings_summary.csv",
            output::spacing_summary_csv(ratios.mean_ratio),
        )?;
        return Ok(("spacings", json!({
            "mean_ratio": ratios.mean_ratio,
            "ratio_count": ratios.count,
            "skipped": ratios.skipped,
            "fit_condition": hist.condition })));
    }
    let grid = p
        .grid
        .as_ref()
        .expect("grid is built whenever a component analysis is configured");
    Ok(match analysis {
        Analysis::Efshape => {
            let pi = correlations::ef_shape(s, w, grid);
            write("efshape.csv", output::binned_csv(&pi, None))?;
            let weight: f64 = pi.mean.iter().flatten().sum::<f64>();
            ("efshape", json!({ "central_bins": central.iter().filter(|&&c| c).count(), "sum": weight }))
        }
        Analysis::Corr1 => {
            let c1 = correlations::corr1(s, w, g, grid)?;
            let pred = correlations::predict_c1(stats, grid).ok();
            write("corr1.csv", output::binned_csv(&c1, pred.as_ref()))?;
            let slope = central_fit(&c1, central, 1).map(|c| c[1]);
            let predicted = stats
                .v_bar
                .map(|v| -1.0 / (v * stats.n_bar))
                .filter(|x| x.is_finite());
            ("corr1", json!({ "slope": slope, "predicted_slope": predicted,
                "relative_error": rel(slope, predicted) }))
        }
        Analysis::Corr2 => {
            let second = correlations::corr2(s, w, g, grid)?;
            let pred = correlations::predict_c2(stats, &second.eta, grid).ok();
            write("corr2.csv", output::binned_csv(&second.c2, pred.as_ref()))?;
            write("eta.csv", output::binned_csv(&second.eta, None))?;
            let curvature = central_fit(&second.c2, central, 2).map(|c| c[2]);
            let predicted = stats
                .w_bar
                .map(|w| 1.0 / (w * stats.n_bar * (stats.n_bar - 1.0)))
                .filter(|x| x.is_finite());
            ("corr2", json!({ "curvature": curvature, "predicted_curvature": predicted,
                "relative_error": rel(curvature, predicted),
                "central_eta": correlations::central_eta(&second.eta, central) }))
        }
        Analysis::Corr1Signed => {
            let signed = correlations::corr1_signed(s, w, g, grid)?;
            let pred = correlations::predict_c1_weighted(stats, grid).ok();
            write("corr1_plus.csv", output::binned_csv(&signed.plus, None))?;
            write("corr1_minus.csv", output::binned_csv(&signed.minus, None))?;
            write(
                "corr1_weighted.csv",
                output::binned_csv(&signed.weighted, pred.as_ref()),
            )?;
            let slope = |b: &BinnedStatistic| central_fit(b, central, 1).map(|c| c[1]);
            let weighted = slope(&signed.weighted);
            let predicted = stats
                .vabs_bar
                .map(|v| -1.0 / (v * stats.n_bar))
                .filter(|x| x.is_finite());
            ("corr1_signed", json!({
                "slope_plus": slope(&signed.plus),
                "slope_minus": slope(&signed.minus),
                "slope_weighted": weighted,
                "predicted_weighted_slope": predicted,
                "relative_error": rel(weighted, predicted) }))
        }
        Analysis::CorrSign => {
            let cs = correlations::corr_sign(s, w, g, grid)?;
            write("corr_sign.csv", output::binned_csv(&cs, None))?;
            ("corr_sign", json!({ "central_mean": masked_mean(&cs, central) }))
        }
        Analysis::AllPairs => {
            let ap = correlations::corr_all_pairs(
                s,
                w,
                grid,
                cfg.all_pairs.sample_cap,
                cfg.all_pairs.seed,
            )?;
            write("all_pairs.csv", output::binned_csv(&ap, None))?;
            let max_abs = ap
                .mean
                .iter()
                .zip(central)
                .filter_map(|(m, &c)| m.filter(|_| c))
                .fold(0.0_f64, |m, x| m.max(x.abs()));
            ("all_pairs", json!({ "central_max_abs": max_abs }))
        }
        Analysis::Dynamics => {
            let d = &cfg.dynamics;
            let initial = match d.initial {
                InitialState::Median(_) => dynamics::median_initial_state(&s.e0, g)?,
                InitialState::Index(i) => i,
            };
            let times = TimeGrid::from_spacing(w.d, d.t_max_over_tau, d.steps)?;
            let res = dynamics::run(s, g, stats, initial, times)?;
            write("dynamics.csv", output::dynamics_csv(&res))?;
            ("dynamics", json!({
                "initial_index": initial,
                "tau": res.times.tau,
                "relative_l2": dynamics::relative_l2(&res.f_i, &res.predicted),
                "relative_l2_global": res.predicted_global.as_ref()
                    .map(|pg| dynamics::relative_l2(&res.f_i, pg)) }))
        }
        Analysis::Spacings => unreachable!("handled above"),
    })
}

/// Least-squares polynomial through the populated central bins.
pub fn central_fit(stat: &BinnedStatistic, central: &[bool], degree: usize) -> Option<Vec<f64>> {
    let (x, y) = stat.points(|k| central[k]);
    fit::polyfit(&x, &y, degree)
}

fn masked_mean(stat: &BinnedStatistic, mask: &[bool]) -> Option<f64> {
    let (_, y) = stat.points(|k| mask[k]);
    (!y.is_empty()).then(|| y.iter().sum::<f64>() / y.len() as f64)
}

fn rel(measured: Option<f64>, predicted: Option<f64>) -> Option<f64> {
    match (measured, predicted) {
        (Some(m), Some(p)) if p != 0.0 => Some((m - p).abs() / p.abs()),
        _ => None,
    }
}
