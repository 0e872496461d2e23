//! Batch front end: config-driven density, bounds, simulation and
//! verification runs that write CSV reports.

pub mod config;
pub mod jobs;

use thiserror::Error;

pub use config::{load, LoadedConfig, RunConfig};
pub use jobs::{run_command, Command, Summary};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    /// 2 for configuration and output problems, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl From<lifespan_core::Error> for CliError {
    fn from(e: lifespan_core::Error) -> Self {
        use lifespan_core::Error as E;
        match e {
            E::NumericalFailure { .. } | E::VanishingSemigroup { .. } | E::FitRejected(_) | E::EmptySearch => {
                CliError::Numerical(e.to_string())
            }
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
