pub mod commands;
pub mod config;
pub mod csvio;

use clap::{Parser, Subcommand};
use serde::Serialize;
use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("csv: {0}")]
    Csv(String),
    #[error(transparent)]
    Core(#[from] esboot::Error),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.to_path_buf(), source }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Io { .. } => "io",
            CliError::Csv(_) => "csv",
            CliError::Core(esboot::Error::Convergence { .. })
            | CliError::Core(esboot::Error::ReplicateFailures { .. })
            | CliError::Core(esboot::Error::TooManyExclusions { .. }) => "convergence",
            CliError::Core(_) => "invalid",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io { .. } | CliError::Csv(_) => 3,
            CliError::Core(_) => 4,
        }
    }

    /// One-line JSON report for stderr.
    pub fn report(&self) -> String {
        #[derive(Serialize)]
        struct Report<'a> {
            error: &'a str,
            message: String,
        }
        serde_json::to_string(&Report { error: self.kind(), message: self.to_string() })
            .unwrap_or_else(|_| self.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "esboot", version, about = "Conditional ES estimation with fixed-design bootstrap intervals")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed; overrides the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    pub workers: usize,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Use S = B = 2000 in studies.
    #[arg(long, global = true)]
    pub full_scale: bool,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum Command {
    /// Simulate a GARCH(1,1) path.
    Simulate,
    /// QML fit of a return series.
    Fit,
    /// Conditional ES, covariance estimate and asymptotic interval.
    Es,
    /// Fixed-design bootstrap intervals.
    Bootstrap,
    /// Monte Carlo coverage study.
    Study,
    /// Kernel densities of the sampling and bootstrap distributions.
    Density,
}

pub fn run(cli: &Cli) -> Result<Vec<PathBuf>, CliError> {
    let config = cli
        .config
        .as_deref()
        .ok_or_else(|| CliError::Config("--config <path> is required".into()))?;
    std::fs::create_dir_all(&cli.out).map_err(|e| CliError::io(&cli.out, e))?;
    match cli.command {
        Command::Simulate => commands::simulate(&config::load(config)?, cli),
        Command::Fit => commands::fit(&config::load(config)?, cli),
        Command::Es => commands::es(&config::load(config)?, cli),
        Command::Bootstrap => commands::bootstrap(&config::load(config)?, cli),
        Command::Study => commands::study(&config::load(config)?, cli),
        Command::Density => commands::density(&config::load(config)?, cli),
    }
}
