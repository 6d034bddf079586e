mod args;
mod calibrate;
mod monitor;
mod simulate;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

/// Exit status for configuration and schema errors.
const EXIT_CONFIG: u8 = 2;
/// Exit status when calibration cannot reach its target.
const EXIT_CALIBRATION: u8 = 3;

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<edetect::Error>() {
        Some(edetect::Error::InvalidConfig { .. }) => EXIT_CONFIG,
        Some(edetect::Error::CalibrationFailed { .. }) => EXIT_CALIBRATION,
        _ => match err.downcast_ref::<monitor::StreamError>() {
            Some(_) => EXIT_CONFIG,
            None => 1,
        },
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => simulate::run(a),
        Command::Monitor(a) => monitor::run(a),
        Command::Calibrate(a) => calibrate::run(a),
        Command::Piggyback(a) => simulate::piggyback(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if let Some(io) = e.downcast_ref::<std::io::Error>() {
                if io.kind() == std::io::ErrorKind::BrokenPipe {
                    return ExitCode::SUCCESS;
                }
            }
            eprintln!("edetect: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
