//! Command-line harness for [`iterlab_core`]: single fidelity values, figure
//! sweeps to CSV, Haar sampler diagnostics, and the comb optimum with comb
//! dumps.

pub mod cli;
pub mod formats;
pub mod run;
pub mod sweep;
pub mod table;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid arguments: {0}")]
    Usage(String),
    #[error("solver did not converge: {0}")]
    NonConvergence(String),
    #[error("check failed: {0}")]
    CheckFailed(String),
    #[error("malformed input: {0}")]
    Format(String),
    #[error(transparent)]
    Core(#[from] iterlab_core::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl CliError {
    /// 2 for bad arguments, 3 for solver non-convergence, 1 otherwise.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Core(iterlab_core::Error::InvalidArgument(_)) => 2,
            CliError::NonConvergence(_) => 3,
            _ => 1,
        }
    }
}
