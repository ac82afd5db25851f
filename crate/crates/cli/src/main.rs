//! `vad` — anomaly-detection pipeline driver.
//!
//! Subcommands: `synth`, `train`, `fit`, `score`, `eval`. Exit statuses:
//! 0 success, 2 config/validation, 3 i/o, 4 numerical failure, 5 model
//! incompatibility.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::PipelineConfig;

/// Command outcome mapped onto the process exit status.
#[derive(Debug)]
pub enum CliError {
    /// Configuration or input validation problem (exit 2).
    Config(String),
    /// Missing files, unwritable outputs, corrupt data (exit 3).
    Io(String),
    /// Numerical failure such as a NaN loss or a singular covariance (exit 4).
    Numeric(String),
    /// Models that cannot work together (exit 5).
    ModelMismatch(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
            CliError::Numeric(_) => 4,
            CliError::ModelMismatch(_) => 5,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Io(m) | CliError::Numeric(m)
            | CliError::ModelMismatch(m) => m,
        }
    }
}

/// Exit-status class of a library error; wrapped errors classify by their
/// innermost cause.
fn classify(err: &vad_core::Error) -> u8 {
    use vad_core::Error as E;
    match err {
        E::Io { .. }
        | E::BadMagic { .. }
        | E::Truncated { .. }
        | E::PayloadMismatch { .. }
        | E::NonFinite { .. }
        | E::MalformedSequence { .. } => 3,
        E::NanLoss { .. }
        | E::CovarianceNotPd { .. }
        | E::DegenerateComponent { .. } => 4,
        E::ModelMismatch { .. } => 5,
        E::EmIteration { source, .. } | E::Scoring { source, .. } => classify(source),
        _ => 2,
    }
}

impl From<vad_core::Error> for CliError {
    fn from(err: vad_core::Error) -> Self {
        let message = err.to_string();
        match classify(&err) {
            3 => CliError::Io(message),
            4 => CliError::Numeric(message),
            5 => CliError::ModelMismatch(message),
            _ => CliError::Config(message),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "vad",
    about = "Unsupervised video anomaly detection over patch-sequence corpora",
    version
)]
struct Cli {
    /// Plain-text config file (`key = value` lines); defaults apply without it.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Override one config key, applied after the file; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the synthetic training and test corpora.
    Synth,
    /// Train the patch and dynamic-image autoencoders.
    Train,
    /// Fit the two latent Gaussian mixtures.
    Fit,
    /// Score a test corpus into per-frame anomaly values.
    Score,
    /// Compute frame-level AUROC, optionally grid-searching fusion weights.
    Eval,
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = PipelineConfig::load(cli.config.as_deref(), &cli.set)?;
    match cli.command {
        Command::Synth => commands::cmd_synth(&cfg),
        Command::Train => commands::cmd_train(&cfg),
        Command::Fit => commands::cmd_fit(&cfg),
        Command::Score => commands::cmd_score(&cfg),
        Command::Eval => commands::cmd_eval(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {}", err.message());
            ExitCode::from(err.exit_code())
        }
    }
}
