//! Command implementations, file formats, and synthetic data behind the
//! `lro` binary. Exposed as a library so integration tests can drive the
//! commands in-process.

pub mod commands;
pub mod csv_io;
pub mod json;
pub mod synth;

use thiserror::Error;

/// CLI-level errors, carrying their process exit code:
/// 2 configuration, 3 infeasible instance, 4 numerical failure.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    /// Map a solver error onto the exit-code classes.
    pub fn from_core(err: lro_core::Error) -> Self {
        use lro_core::Error as E;
        match err {
            E::EmptySet { .. } | E::EmptyBand { .. } => CliError::Infeasible(err.to_string()),
            E::NumericalFailure(_) => CliError::Numerical(err.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }

    /// Map a solver error that can only stem from bad inputs.
    pub fn from_core_config(err: lro_core::Error) -> Self {
        CliError::Config(err.to_string())
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Io(_) | CliError::Csv(_) => 2,
            CliError::Infeasible(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }
}

/// Worker-thread cap from `LRO_THREADS` (0 = auto). The current pipeline is
/// sequential, so the cap is validated, echoed into reports, and otherwise
/// inert; it bounds future parallel sections.
pub fn worker_threads() -> Result<u64, CliError> {
    match std::env::var("LRO_THREADS") {
        Err(_) => Ok(0),
        Ok(v) => v
            .trim()
            .parse::<u64>()
            .map_err(|_| CliError::Config(format!("LRO_THREADS=`{v}` is not an integer"))),
    }
}
