//! Run configuration, read from strict JSON.
//!
//! ```json
//! {
//!   "model": { "type": "defect_ising" },
//!   "sign_flip": { "fraction": 0.3, "seed": 7 },
//!   "window_count": 50,
//!   "grid": "auto",
//!   "analyses": ["efshape", "corr1", "corr2"],
//!   "dynamics": { "initial": "median", "t_max_over_tau": 1000, "steps": 1000 },
//!   "output_dir": "out"
//! }
//! ```
//!
//! Model parameters left out take their default values. Unknown keys are
//! rejected at every level.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::correlations::BinGrid;
use crate::error::{Error, Result};
use crate::model::ModelSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Analysis {
    Efshape,
    Corr1,
    Corr2,
    Corr1Signed,
    CorrSign,
    AllPairs,
    Dynamics,
    Spacings,
}

impl Analysis {
    /// Whether the analysis reads eigenvector components.
    pub fn needs_components(self) -> bool {
        !matches!(self, Analysis::Spacings)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignFlip {
    pub fraction: f64,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Auto {
    Auto,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridSpec {
    Auto(Auto),
    Explicit(BinGrid),
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec::Auto(Auto::Auto)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Median {
    Median,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InitialState {
    Median(Median),
    Index(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DynamicsConfig {
    pub initial: InitialState,
    pub t_max_over_tau: f64,
    pub steps: usize,
}

impl Default for DynamicsConfig {
    fn default() -> Self {
        Self {
            initial: InitialState::Median(Median::Median),
            t_max_over_tau: 1000.0,
            steps: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpacingsConfig {
    /// Central fraction of each sector's levels used for level statistics.
    pub window_fraction: f64,
    pub poly_degree: usize,
    pub n_bins: usize,
}

impl Default for SpacingsConfig {
    fn default() -> Self {
        Self {
            window_fraction: 0.5,
            poly_degree: 6,
            n_bins: 40,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AllPairsConfig {
    /// Ordered pairs sampled; at or above `dim·(dim−1)` every pair is used.
    pub sample_cap: usize,
    pub seed: u64,
}

impl Default for AllPairsConfig {
    fn default() -> Self {
        Self {
            sample_cap: usize::MAX,
            seed: 0,
        }
    }
}

fn default_window_count() -> usize {
    50
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSpec,
    #[serde(default)]
    pub sign_flip: Option<SignFlip>,
    #[serde(default = "default_window_count")]
    pub window_count: usize,
    #[serde(default)]
    pub grid: GridSpec,
    pub analyses: Vec<Analysis>,
    #[serde(default)]
    pub dynamics: DynamicsConfig,
    #[serde(default)]
    pub spacings: SpacingsConfig,
    #[serde(default)]
    pub all_pairs: AllPairsConfig,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

fn invalid(field: &str, reason: impl Into<String>) -> Error {
    Error::ConfigInvalid {
        field: field.into(),
        reason: reason.into(),
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.analyses.is_empty() {
            return Err(invalid("analyses", "at least one analysis is required"));
        }
        if self.window_count < 2 {
            return Err(invalid("window_count", "must be at least 2"));
        }
        if let Some(flip) = &self.sign_flip {
            if !(0.0..=1.0).contains(&flip.fraction) {
                return Err(invalid(
                    "sign_flip.fraction",
                    format!("must lie in [0, 1], got {}", flip.fraction),
                ));
            }
        }
        if let GridSpec::Explicit(grid) = &self.grid {
            grid.validate()
                .map_err(|e| invalid("grid", e.to_string()))?;
        }
        let d = &self.dynamics;
        if d.steps == 0 {
            return Err(invalid("dynamics.steps", "must be at least 1"));
        }
        if !(d.t_max_over_tau.is_finite() && d.t_max_over_tau >= 0.0) {
            return Err(invalid("dynamics.t_max_over_tau", "must be finite and non-negative"));
        }
        let sp = &self.spacings;
        if !(sp.window_fraction > 0.0 && sp.window_fraction <= 1.0) {
            return Err(invalid("spacings.window_fraction", "must lie in (0, 1]"));
        }
        if sp.poly_degree == 0 || sp.n_bins == 0 {
            return Err(invalid("spacings", "poly_degree and n_bins must be at least 1"));
        }
        if self.all_pairs.sample_cap == 0 {
            return Err(invalid("all_pairs.sample_cap", "must be at least 1"));
        }
        Ok(())
    }

    /// Requested analyses, deduplicated, in first-mention order.
    pub fn analyses(&self) -> Vec<Analysis> {
        let mut out = Vec::new();
        for a in &self.analyses {
            if !out.contains(a) {
                out.push(*a);
            }
        }
        out
    }
}

/// Parses and validates a configuration.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::ConfigParse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    cfg.validate()?;
    Ok(cfg)
}
