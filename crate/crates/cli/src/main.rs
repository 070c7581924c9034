//! Command-line front end: train, parse, eval, selftest, bench, ensemble.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage error.

mod commands;

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(String),
}

impl From<exparse::Error> for CliError {
    fn from(e: exparse::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

pub type CliResult = Result<(), CliError>;

#[derive(Parser)]
#[command(
    name = "exparse",
    about = "Transition-based dependency parsing with exact decoders and global training",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a parser and write the best-development checkpoint.
    Train(commands::TrainArgs),
    /// Parse a CoNLL file with a trained checkpoint.
    Parse(commands::ParseArgs),
    /// Score a parsed file against gold annotation.
    Eval(commands::EvalArgs),
    /// Run the enumeration-backed equivalence suites.
    Selftest(commands::SelftestArgs),
    /// Time the exact decoders across sentence lengths.
    Bench(commands::BenchArgs),
    /// Parse with a committee of checkpoints via vote reparsing.
    Ensemble(commands::EnsembleArgs),
}

/// Input files that must exist before work starts are usage errors when
/// missing.
pub fn require_file(path: &PathBuf, what: &str) -> Result<(), CliError> {
    if !path.is_file() {
        return Err(CliError::Usage(format!("{what} `{}` is not a readable file", path.display())));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train(args) => commands::train(args),
        Command::Parse(args) => commands::parse(args),
        Command::Eval(args) => commands::eval(args),
        Command::Selftest(args) => commands::selftest(args),
        Command::Bench(args) => commands::bench(args),
        Command::Ensemble(args) => commands::ensemble(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
