mod args;
mod commands;
mod manifest;
mod oracle_suite;
mod settings;

use clap::Parser;
use ril_core::Error as CoreError;
use std::process::ExitCode;

/// Exit code for a malformed or invalid configuration.
pub const EXIT_CONFIG: u8 = 3;
/// Exit code when a computation exceeds its memory or enumeration budget.
pub const EXIT_BUDGET: u8 = 4;
pub const EXIT_FAILURE: u8 = 1;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

pub type Outcome<T> = Result<T, CliError>;

impl CliError {
    pub fn config(key: &str, msg: impl std::fmt::Display) -> Self {
        CliError {
            code: EXIT_CONFIG,
            message: format!("invalid config key `{key}`: {msg}"),
        }
    }

    pub fn failure(msg: impl std::fmt::Display) -> Self {
        CliError {
            code: EXIT_FAILURE,
            message: msg.to_string(),
        }
    }

    pub fn from_core(e: CoreError) -> Self {
        let code = match &e {
            CoreError::InvalidParameter { .. } | CoreError::Parse { .. } | CoreError::InvalidDistribution(_) => {
                EXIT_CONFIG
            }
            CoreError::UnsupportedDimension(_) | CoreError::UnsupportedParams { .. } => EXIT_CONFIG,
            CoreError::MemoryBudget { .. }
            | CoreError::StepBudget { .. }
            | CoreError::EnumerationBudget { .. }
            | CoreError::BoxTooSmall { .. } => {
                EXIT_BUDGET
            }
            _ => EXIT_FAILURE,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        CliError::from_core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::failure(e)
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = args::Cli::parse();
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
