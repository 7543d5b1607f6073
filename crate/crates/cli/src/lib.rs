//! Batch front end: `discover`, `simulate`, `cohort` and `benchmark`, each
//! driven by a JSON config with flag overrides.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use error::{CliError, Result};

use config::TestKind;

#[derive(Debug, Parser)]
#[command(name = "causal-ts", version, about = "Causal discovery for multivariate time series")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Discover one causal graph per input panel.
    Discover(DiscoverArgs),
    /// Draw panels from a structural causal model.
    Simulate(SimulateArgs),
    /// Aggregate per-subject graphs into cohort tables.
    Cohort(CohortArgs),
    /// Score discovery against simulated ground truth.
    Benchmark(BenchmarkArgs),
}

/// Flags shared by every command.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// JSON run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; does not affect results.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct DiscoverArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Maximum lag, in sampling steps of the analysis resolution.
    #[arg(long)]
    pub tau_max: Option<usize>,
    /// Analysis resolution in seconds; inputs are resampled to it.
    #[arg(long)]
    pub resolution: Option<u32>,
    #[arg(long, value_enum)]
    pub test: Option<TestKind>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Panel CSV files or directories of them.
    pub inputs: Vec<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Model spec JSON file.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Number of panels.
    #[arg(long)]
    pub n: Option<usize>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct CohortArgs {
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Default, Args)]
pub struct BenchmarkArgs {
    #[command(flatten)]
    pub common: CommonArgs,
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Discover(a) => commands::discover::run(&a),
        Command::Simulate(a) => commands::simulate::run(&a),
        Command::Cohort(a) => commands::cohort::run(&a),
        Command::Benchmark(a) => commands::benchmark::run(&a),
    }
}
