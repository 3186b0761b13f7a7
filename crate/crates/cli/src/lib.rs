//! Experiment runner around `dobench-core`: config files, seeded runs,
//! CSV results, parameter sweeps, and database snapshots.

pub mod config;
pub mod runner;
pub mod snapshot;

use thiserror::Error;

/// Errors surfaced by the runner and CLI.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}:{line}: {message}")]
    Config {
        path: String,
        line: usize,
        message: String,
    },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("model error: {0}")]
    Core(#[from] dobench_core::Error),
    #[error("{0}")]
    Usage(String),
}

pub type Result<T> = std::result::Result<T, CliError>;
