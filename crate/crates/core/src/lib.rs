//! Eigenfunction correlation analysis for quantum chaotic Hamiltonians
//! `H = H₀ + V` whose perturbation `V` is sparse in the eigenbasis of `H₀`.
//!
//! The pipeline is: build a model ([`model`]), diagonalize it
//! ([`spectral`]), extract the coupling structure of `V` ([`coupling`]),
//! then measure energy-resolved component correlations
//! ([`correlations`]), transition dynamics ([`dynamics`]) and level
//! statistics ([`chaoticity`]). [`pipeline`] ties these together behind a
//! JSON configuration.

pub mod chaoticity;
pub mod config;
pub mod correlations;
pub mod coupling;
pub mod dynamics;
pub mod eigen;
pub mod error;
pub mod fit;
pub mod model;
pub mod output;
pub mod pipeline;
pub mod sparse;
pub mod spectral;

pub use error::{Error, Result};
