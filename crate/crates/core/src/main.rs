use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use eigencorr::config::{parse_config, RunConfig};
use eigencorr::pipeline::run_pipeline;
use eigencorr::{model, Error, Result};

/// Eigenfunction correlations in perturbed many-body Hamiltonians.
#[derive(Debug, Parser)]
#[command(name = "eigencorr", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the configured analyses and write CSVs plus a manifest.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides `output_dir` from the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Parse and check a configuration, including model parameters.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

fn load(path: &PathBuf) -> Result<RunConfig> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_config(&text)
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config, out } => {
            let cfg = load(&config)?;
            let manifest = run_pipeline(&cfg, out.as_deref())?;
            let dir = out.unwrap_or(cfg.output_dir);
            println!(
                "dim {}  window {}..={}  d {:.6e}",
                manifest.dim, manifest.window.first, manifest.window.last, manifest.window.d
            );
            for (name, summary) in &manifest.summary {
                println!("{name}: {summary}");
            }
            println!("wrote {} files to {}", manifest.files.len() + 1, dir.display());
        }
        Command::Validate { config } => {
            let cfg = load(&config)?;
            let (_, h) = model::build(&cfg.model)?;
            println!("ok: dim {}, {} couplings", h.dim(), h.v.nnz_upper());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
