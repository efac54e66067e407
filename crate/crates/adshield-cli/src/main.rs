//! adshield: detect generated native ads in RAG responses and measure
//! detector robustness across advertising styles and generating LLMs.

mod commands;
mod config;
mod http_client;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

/// Failure classes map to exit codes: usage 2, data/validation 1, partial
/// generation 3.
#[derive(Debug)]
pub enum AppError {
    Usage(String),
    Data(String),
    Partial(String),
}

impl AppError {
    fn exit_code(&self) -> u8 {
        match self {
            AppError::Usage(_) => 2,
            AppError::Data(_) => 1,
            AppError::Partial(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            AppError::Usage(m) | AppError::Data(m) | AppError::Partial(m) => m,
        }
    }
}

macro_rules! data_error_from {
    ($($ty:ty),* $(,)?) => {
        $(impl From<$ty> for AppError {
            fn from(e: $ty) -> Self {
                AppError::Data(e.to_string())
            }
        })*
    };
}

data_error_from!(
    adshield_core::corpus::CorpusError,
    adshield_core::classify::ClassifyError,
    adshield_core::tagger::TaggerError,
    adshield_core::evaluate::EvalError,
    adshield_core::stats::StatsError,
    adshield_core::evasion::EvasionError,
    adshield_core::features::FeatureError,
    std::io::Error,
);

#[derive(Parser)]
#[command(
    name = "adshield",
    version,
    about = "Detect generated native ads in RAG responses and measure detector robustness"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate and normalize a corpus file into the canonical format.
    Ingest(commands::ingest::IngestArgs),
    /// Train a detector (rf | svm | dict | tagger) and write a model file.
    Train(commands::train::TrainArgs),
    /// Run a response-level detector over a corpus, writing predictions.
    Predict(commands::predict::PredictArgs),
    /// Run the BIO tagger over a corpus, writing predictions with tags.
    Tag(commands::tag::TagArgs),
    /// Regenerate restyled ad variants of a reference test set.
    Generate(commands::generate::GenerateArgs),
    /// Score a prediction file against gold labels.
    Evaluate(commands::evaluate::EvaluateArgs),
    /// Build the odds-ratio robustness battery across variants.
    Robustness(commands::robustness::RobustnessArgs),
    /// Re-emit a report in another format, refreshing FDR flags.
    Report(commands::report_cmd::ReportArgs),
}

/// Common flag: every subcommand accepts a key=value config file whose
/// values are overridden by explicit flags.
#[derive(Debug, clap::Args)]
pub struct ConfigFlag {
    /// Plain-text key=value run configuration (see the sidecar files).
    #[arg(long)]
    config: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Ingest(args) => commands::ingest::run(args),
        Command::Train(args) => commands::train::run(args),
        Command::Predict(args) => commands::predict::run(args),
        Command::Tag(args) => commands::tag::run(args),
        Command::Generate(args) => commands::generate::run(args),
        Command::Evaluate(args) => commands::evaluate::run(args),
        Command::Robustness(args) => commands::robustness::run(args),
        Command::Report(args) => commands::report_cmd::run(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}
