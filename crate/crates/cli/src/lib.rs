//! Command-line pipeline around `latentscope-core`: synthetic data, VAE
//! training, per-dimension mixture priors, HMC sampling and KS diagnostics.

pub mod config;
pub mod error;
pub mod io;
pub mod manifest;
pub mod pipeline;
pub mod svg;

use std::path::PathBuf;

use clap::{Parser, ValueEnum};

pub use config::PipelineConfig;
pub use error::{CliError, CliResult};
pub use latentscope_core as core;
pub use manifest::RunManifest;
pub use pipeline::{Pipeline, Stage};

/// Environment variable capping worker threads.
pub const THREADS_ENV: &str = "LATENTSCOPE_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    GenData,
    Train,
    FitPrior,
    Sample,
    Diagnose,
    All,
}

#[derive(Debug, Parser)]
#[command(name = "latentscope", version, about = "Latent-space validation pipeline for a denoising VAE")]
pub struct Cli {
    #[arg(value_enum)]
    pub command: Command,
    /// Pipeline config (`key = value` under section headers).
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory for all artifacts.
    #[arg(long, default_value = "latentscope-out")]
    pub out: PathBuf,
    /// Overrides the config's root seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

/// Caps the global rayon pool from `LATENTSCOPE_THREADS` when it is set.
pub fn configure_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("{THREADS_ENV} must be a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(format!("cannot size the thread pool: {e}")))
}

pub fn run(cli: &Cli) -> CliResult<()> {
    let mut config = PipelineConfig::load(&cli.config)?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
        config.validate()?;
    }
    let pipeline = Pipeline::new(config, &cli.out)?;
    match cli.command {
        Command::GenData => pipeline.run(Stage::GenData),
        Command::Train => pipeline.run(Stage::Train),
        Command::FitPrior => pipeline.run(Stage::FitPrior),
        Command::Sample => pipeline.run(Stage::Sample),
        Command::Diagnose => pipeline.run(Stage::Diagnose),
        Command::All => pipeline.run_all(),
    }
}
