//! Command-line front end: block-size optimization, composition
//! calculators, gradient privatization, bound evaluation, the toy trainer,
//! and the enumeration oracle.

mod cmd_bounds;
mod cmd_compose;
mod cmd_optimize;
mod cmd_oracle;
mod cmd_shuffle;
mod cmd_train;
mod io;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use shuffledp::ErrorKind;

/// CLI failure with the exit code it maps to: 1 for validation errors,
/// 2 for numeric-domain errors.
#[derive(Debug)]
pub struct CliError {
    message: String,
    code: u8,
}

impl CliError {
    pub fn validation(message: impl Into<String>) -> Self {
        Self {
            message: message.into(),
            code: 1,
        }
    }
}

impl From<shuffledp::Error> for CliError {
    fn from(err: shuffledp::Error) -> Self {
        let code = match err.kind() {
            ErrorKind::Validation => 1,
            ErrorKind::Domain => 2,
        };
        Self {
            message: err.to_string(),
            code,
        }
    }
}

/// Write a rendered document to the given path, or stdout when absent.
pub fn emit(text: &str, path: Option<&PathBuf>) -> Result<(), CliError> {
    match path {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::validation(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

#[derive(Parser)]
#[command(
    name = "shuffledp",
    version,
    about = "Differentially private block-wise gradient shuffling toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Pick per-group block sizes for a privacy budget and print the plan
    Optimize(cmd_optimize::OptimizeArgs),
    /// Evaluate a composition or amplification calculator
    Compose(cmd_compose::ComposeArgs),
    /// Clip and block-shuffle per-group gradients from a CSV
    Shuffle(cmd_shuffle::ShuffleArgs),
    /// Evaluate closed-form bounds and small-instance diagnostics
    Bounds(cmd_bounds::BoundsArgs),
    /// Run the toy SGD harness and compare against the convergence bound
    Train(cmd_train::TrainArgs),
    /// Exhaustively enumerate block-shuffle outcomes for a small gradient
    Oracle(cmd_oracle::OracleArgs),
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Optimize(args) => cmd_optimize::run(args),
        Command::Compose(args) => cmd_compose::run(args),
        Command::Shuffle(args) => cmd_shuffle::run(args),
        Command::Bounds(args) => cmd_bounds::run(args),
        Command::Train(args) => cmd_train::run(args),
        Command::Oracle(args) => cmd_oracle::run(args),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind as ClapKind;
            let is_help =
                matches!(err.kind(), ClapKind::DisplayHelp | ClapKind::DisplayVersion);
            let _ = err.print();
            return if is_help {
                ExitCode::SUCCESS
            } else {
                // Unknown flags and malformed arguments are validation errors.
                ExitCode::from(1)
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {}", err.message);
            ExitCode::from(err.code)
        }
    }
}
