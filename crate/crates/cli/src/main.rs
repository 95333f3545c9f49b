mod commands;
mod run;

use std::process::ExitCode;

use clap::Parser;
use nrhlc::Error;

use commands::Command;

/// Noise reduction and hearing-loss compensation through a differentiable
/// auditory model.
#[derive(Parser, Debug)]
#[command(name = "nrhlc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

const EXIT_VALIDATION: u8 = 2;
const EXIT_IO: u8 = 3;
const EXIT_FORMAT: u8 = 4;
const EXIT_RUNTIME: u8 = 5;

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io { .. } => EXIT_IO,
        Error::Format(_) => EXIT_FORMAT,
        Error::Validation(_) | Error::Config(_) | Error::Input(_) | Error::Shape(_) | Error::Domain(_) => {
            EXIT_VALIDATION
        }
        Error::State(_) | Error::Training(_) | Error::NonFinite(_) => EXIT_RUNTIME,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run::execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
