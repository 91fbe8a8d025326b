//! Command-line front end: prepare, train, compare, anomalies, cluster,
//! downstream, or all stages in order, driven by one config file.

mod config;
mod runner;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::parse_config;
use runner::{Runner, Stage};

#[derive(Parser)]
#[command(
    name = "latentmine",
    version,
    about = "Autoencoder-based feature extraction, anomaly detection and method comparison for tabular data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Run configuration file (strict: unknown keys are errors).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides [output] directory from the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed override; replaces model.seed for the whole run.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Load or generate the dataset, split it, fit the preprocessing
    /// pipeline, and persist the standardized matrices.
    Prepare(RunArgs),
    /// Train the configured model on the prepared matrices.
    Train(RunArgs),
    /// Fit every configured method per seed and write the comparison table.
    Compare(RunArgs),
    /// Flag test rows by reconstruction error against a train-calibrated
    /// threshold.
    Anomalies(RunArgs),
    /// K-means in the latent space of the trained model.
    Cluster(RunArgs),
    /// Train classifiers on latent features per method and score them on
    /// the test split.
    Downstream(RunArgs),
    /// Run every stage in order.
    All(RunArgs),
}

impl Command {
    fn split(self) -> (Stage, RunArgs) {
        match self {
            Command::Prepare(a) => (Stage::Prepare, a),
            Command::Train(a) => (Stage::Train, a),
            Command::Compare(a) => (Stage::Compare, a),
            Command::Anomalies(a) => (Stage::Anomalies, a),
            Command::Cluster(a) => (Stage::Cluster, a),
            Command::Downstream(a) => (Stage::Downstream, a),
            Command::All(a) => (Stage::All, a),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (stage, args) = cli.command.split();
    let mut config = match parse_config(&args.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: cli/parse_config: {e}");
            return ExitCode::FAILURE;
        }
    };
    if let Some(out) = args.out {
        config.output.directory = out.display().to_string();
    }
    if let Some(seed) = args.seed {
        config.model.seed = seed;
    }
    match Runner::new(config).run(stage) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
