//! Command-line toolkit for functional load estimation and phylogenetic
//! comparative statistics over posterior tree samples.

mod commands;
mod config;
mod reconcile;
mod render;
mod traits_io;
mod util;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use thiserror::Error;

use phyloload::funcload::FlError;
use phyloload::phylostats::StatsError;
use phyloload::phylotree::TreeError;
use phyloload::segmental::SegmentalError;

/// Exit 1 means the data were statistically degenerate; exit 2 means the
/// inputs themselves were bad (missing files, parse failures, bad flags).
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Degenerate(String),
    #[error("{0}")]
    Input(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Degenerate(_) => 1,
            CliError::Input(_) => 2,
        }
    }
}

impl From<StatsError> for CliError {
    fn from(err: StatsError) -> Self {
        match err {
            StatsError::DegenerateTrait(_)
            | StatsError::ZeroVariance(_)
            | StatsError::SingularCovariance => CliError::Degenerate(err.to_string()),
            other => CliError::Input(other.to_string()),
        }
    }
}

impl From<TreeError> for CliError {
    fn from(err: TreeError) -> Self {
        CliError::Input(err.to_string())
    }
}

impl From<FlError> for CliError {
    fn from(err: FlError) -> Self {
        CliError::Input(err.to_string())
    }
}

impl From<SegmentalError> for CliError {
    fn from(err: SegmentalError) -> Self {
        CliError::Input(err.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(err: serde_json::Error) -> Self {
        CliError::Input(err.to_string())
    }
}

#[derive(Parser)]
#[command(
    name = "phyloload",
    version,
    about = "Functional load of phonological contrasts and phylogenetic signal over tree samples"
)]
struct Cli {
    /// TOML config file; command-line flags override its keys.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute per-language functional load from segmented lexicons.
    Fl(commands::fl::FlArgs),
    /// Test one trait for phylogenetic signal (Blomberg's K) over trees.
    Signal(commands::signal::SignalArgs),
    /// Correlate two traits under phylogenetic covariance over trees.
    Corr(commands::corr::CorrArgs),
    /// Simulate Brownian-motion traits on a tree.
    Simulate(commands::simulate::SimulateArgs),
    /// Render an HTML report with SVG figures from earlier outputs.
    Report(commands::report::ReportArgs),
}

fn init_thread_pool() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("PHYLOLOAD_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw.parse().ok().filter(|&n| n >= 1).ok_or_else(|| {
        CliError::Input(format!("PHYLOLOAD_THREADS=`{raw}` is not a thread count"))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|err| CliError::Input(format!("thread pool: {err}")))
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = config::FileConfig::load(cli.config.as_deref())?;
    match cli.command {
        Command::Fl(args) => commands::fl::run(args, &cfg),
        Command::Signal(args) => commands::signal::run(args, &cfg),
        Command::Corr(args) => commands::corr::run(args, &cfg),
        Command::Simulate(args) => commands::simulate::run(args, &cfg),
        Command::Report(args) => commands::report::run(args, &cfg),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    if let Err(err) = init_thread_pool() {
        eprintln!("error: {err}");
        return ExitCode::from(err.exit_code());
    }
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
