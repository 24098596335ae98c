//! `churnlens` command-line front end.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 internal invariant
//! violation.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod output;

#[derive(Parser, Debug)]
#[command(name = "churnlens", version, about = "Follower churn and gender-composition analysis")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// Analysis config (TOML key/value file).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for every random choice; overrides the config's `seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Write outputs into this directory instead of stdout.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Markdown,
    Json,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Parse and validate snapshot files, optionally normalising them.
    Ingest(commands::IngestArgs),
    /// Churn between two snapshots, or between consecutive window boundaries.
    Diff(commands::DiffArgs),
    /// Where one account's unfollowers went.
    Transitions(commands::TransitionsArgs),
    /// Weak gender labels from display names.
    Label(commands::LabelArgs),
    /// Run manifest images through filtering and crop/resize.
    Prep(commands::PrepArgs),
    /// Train the classifier on weakly labeled tensors.
    Train(commands::TrainArgs),
    /// Precision, recall, F1 and accuracy of a model on labeled tensors.
    Eval(commands::EvalArgs),
    /// Predict gender for manifest images.
    Classify(commands::ClassifyArgs),
    /// Two-proportion score test on raw counts.
    Scoretest(commands::ScoretestArgs),
    /// End-to-end before/after composition report.
    Report(commands::ReportArgs),
    /// Generate a synthetic dataset with planted compositions.
    Synth(commands::SynthArgs),
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Invariant(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Invariant(_) => 3,
        }
    }
}

impl From<churnlens::Error> for CliError {
    fn from(e: churnlens::Error) -> Self {
        if e.is_invariant_violation() {
            CliError::Invariant(e.to_string())
        } else {
            CliError::Data(e.to_string())
        }
    }
}

macro_rules! data_error_from {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                churnlens::Error::from(e).into()
            }
        }
    )*};
}

data_error_from!(
    churnlens::snapshots::SnapshotError,
    churnlens::churn::ChurnError,
    churnlens::weaklabel::LabelError,
    churnlens::imageprep::PrepError,
    churnlens::cnn::CnnError,
    churnlens::stats::StatsError,
    churnlens::pipeline::PipelineError
);

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let (kind, msg) = match &e {
                CliError::Usage(m) => ("usage error", m),
                CliError::Data(m) => ("error", m),
                CliError::Invariant(m) => ("internal invariant violated", m),
            };
            eprintln!("churnlens: {kind}: {msg}");
            ExitCode::from(e.code())
        }
    }
}
