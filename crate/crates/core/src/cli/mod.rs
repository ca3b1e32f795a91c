//! Command-line front end: `embed`, `train`, `evaluate`, `predict`, `reproduce` and
//! `gradcheck`.
//!
//! Exit codes: 0 success, 2 configuration or input error, 3 runtime or training
//! error, 4 self-check failure.

mod commands;
mod config;
mod preset;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use commands::{parse_predict_input, PredictInput};
pub use config::{DatasetSection, ExperimentSection, FormatChoice, OutputSection, RunConfig, OUT_ENV, SEED_ENV};
pub use preset::{Preset, PresetJob};

use crate::error::Error;
use crate::eval::GridKind;
use crate::selfcheck::Fault;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;
pub const EXIT_SELFCHECK: i32 = 4;

/// Exit code for an error that reaches the top level.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io { .. }
        | Error::MalformedRow { .. }
        | Error::InvalidResidue { .. }
        | Error::InvalidLength { .. }
        | Error::EmptyDataset(_)
        | Error::SequenceTooShort { .. }
        | Error::InvalidArgument(_)
        | Error::InvalidSplit(_)
        | Error::Corrupt(_)
        | Error::VersionMismatch { .. }
        | Error::Config(_) => EXIT_INPUT,
        Error::EmptyVocabulary { .. }
        | Error::Shape(_)
        | Error::NonFinite(_)
        | Error::Diverged { .. }
        | Error::SingleClass => EXIT_RUNTIME,
    }
}

#[derive(Debug, Parser)]
#[command(name = "acpclass", version, about = "Anticancer peptide classification with k-mer embeddings and recurrent/convolutional networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// TOML run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Dataset file (CSV `sample,content,label` or FASTA `>id|label`).
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Global seed for splits, embeddings, initialization and shuffling.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train an embedding on a whole dataset and write it.
    Embed {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Train one classifier on one holdout split; writes the model and its loss curve.
    Train {
        #[command(flatten)]
        common: CommonArgs,
        /// Use this embedding file instead of training one on the split.
        #[arg(long)]
        embedding: Option<PathBuf>,
    },
    /// Run the repeated-holdout protocol for one cell or a whole grid.
    Evaluate {
        #[command(flatten)]
        common: CommonArgs,
        /// Evaluate a grid instead of the configured cell.
        #[arg(long, value_parser = parse_grid)]
        grid: Option<GridKind>,
        /// Number of holdout repetitions.
        #[arg(long)]
        runs: Option<usize>,
    },
    /// Score sequences with a trained model.
    Predict {
        /// Model file written by `train`.
        #[arg(long)]
        model: PathBuf,
        /// Sequences: FASTA, `id,sequence` lines, or one sequence per line.
        #[arg(long)]
        input: PathBuf,
    },
    /// Run a locked experiment preset end to end.
    Reproduce {
        #[arg(long, value_enum)]
        preset: Preset,
        /// Dataset file for single-dataset presets.
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long)]
        runs: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Finite-difference check of every layer, loss and architecture.
    Gradcheck {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Random instances per component.
        #[arg(long, default_value_t = 20)]
        instances: usize,
        #[arg(long, hide = true, value_parser = parse_fault)]
        inject_fault: Option<Fault>,
    },
}

fn parse_grid(s: &str) -> Result<GridKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_fault(s: &str) -> Result<Fault, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Parses `args` (including the program name) and runs the command, writing
/// normal output to `out` and diagnostics to `err`. Returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{text}");
            } else {
                let _ = write!(out, "{text}");
            }
            return code;
        }
    };
    match commands::dispatch(cli.command, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if let Error::Diverged { last_finite_epoch, .. } = &e {
                let _ = writeln!(err, "last finite epoch: {last_finite_epoch:?}");
            }
            exit_code(&e)
        }
    }
}

/// Entry point of the `acpclass` binary.
pub fn main() -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
}
