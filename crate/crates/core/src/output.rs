//! CSV emission with a fixed numeric format and file checksums.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::chaoticity::{SpacingHistogram, GOE_MEAN_RATIO, POISSON_MEAN_RATIO};
use crate::correlations::{BinnedStatistic, Curve};
use crate::coupling::CouplingStats;
use crate::dynamics::DynamicsResult;
use crate::error::{Error, Result};

/// Twelve significant digits in scientific notation.
pub fn fmt_num(x: f64) -> String {
    if x == 0.0 {
        // avoid a separate "-0" spelling
        return "0.00000000000e0".into();
    }
    format!("{x:.11e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_num).unwrap_or_default()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileRecord {
    pub name: String,
    pub bytes: usize,
    pub sha256: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .fold(String::with_capacity(64), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
}

/// Writes `contents` to `dir/name` and returns its record.
pub fn write_file(dir: &Path, name: &str, contents: &str) -> Result<FileRecord> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(FileRecord {
        name: name.to_string(),
        bytes: contents.len(),
        sha256: sha256_hex(contents.as_bytes()),
    })
}

/// `eps_center,value,count[,prediction]`
pub fn binned_csv(stat: &BinnedStatistic, prediction: Option<&Curve>) -> String {
    let mut out = String::from("eps_center,value,count");
    if prediction.is_some() {
        out.push_str(",prediction");
    }
    out.push('\n');
    for k in 0..stat.centers.len() {
        let _ = write!(
            out,
            "{},{},{}",
            fmt_num(stat.centers[k]),
            fmt_opt(stat.mean[k]),
            stat.count[k]
        );
        if let Some(p) = prediction {
            let _ = write!(out, ",{}", fmt_opt(p.value[k]));
        }
        out.push('\n');
    }
    out
}

/// `alpha,E_alpha`
pub fn spectrum_csv(energies: &[f64]) -> String {
    let mut out = String::from("alpha,E_alpha\n");
    for (a, e) in energies.iter().enumerate() {
        let _ = writeln!(out, "{a},{}", fmt_num(*e));
    }
    out
}

/// `t_over_tau,F_i,F_i_pred,survival_prob`
pub fn dynamics_csv(res: &DynamicsResult) -> String {
    let mut out = String::from("t_over_tau,F_i,F_i_pred,survival_prob\n");
    for k in 0..res.f_i.len() {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            fmt_num(res.times.points[k] / res.times.tau),
            fmt_num(res.f_i[k]),
            fmt_num(res.predicted[k]),
            fmt_num(res.survival[k].norm_sqr())
        );
    }
    out
}

/// `s,density,wigner,poisson`
pub fn spacing_csv(h: &SpacingHistogram) -> String {
    let mut out = String::from("s,density,wigner,poisson\n");
    for k in 0..h.centers.len() {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            fmt_num(h.centers[k]),
            fmt_num(h.density[k]),
            fmt_num(h.wigner[k]),
            fmt_num(h.poisson[k])
        );
    }
    out
}

/// `mean_ratio,goe_ref,poisson_ref`
pub fn spacing_summary_csv(mean_ratio: f64) -> String {
    format!(
        "mean_ratio,goe_ref,poisson_ref\n{},{},{}\n",
        fmt_num(mean_ratio),
        fmt_num(GOE_MEAN_RATIO),
        fmt_num(POISSON_MEAN_RATIO)
    )
}

pub fn stats_csv(s: &CouplingStats) -> String {
    format!(
        "n_bar,v_bar,v2_bar,vabs_bar,w_bar,n_plus,n_minus,v_plus,v_minus\n{},{},{},{},{},{},{},{},{}\n",
        fmt_num(s.n_bar),
        fmt_opt(s.v_bar),
        fmt_opt(s.v2_bar),
        fmt_opt(s.vabs_bar),
        fmt_opt(s.w_bar),
        fmt_num(s.n_plus),
        fmt_num(s.n_minus),
        fmt_opt(s.v_plus),
        fmt_opt(s.v_minus),
    )
}
