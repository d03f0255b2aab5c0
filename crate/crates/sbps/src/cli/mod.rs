//! Experiment-runner surface behind the `sbps` binary: run configuration
//! with a key-value file format, trajectory/summary serialization,
//! hyperparameter scans and diagnostics with plot emission.

mod commands;
mod config;
mod plot;
mod trajectory;

pub use commands::{
    cmd_diag, cmd_run, cmd_scan, load_record, DiagOptions, RunArtifacts, RunRecord, ScanAxis,
    ScanRow,
};
pub use config::{RunConfig, SamplerKind, TargetKind};
pub use plot::{write_svg, Series};
pub use trajectory::{read_trajectory, write_trajectory};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad configuration or malformed input files; exit code 1.
    #[error("{0}")]
    Validation(String),
    /// Failures during a run or when writing outputs; exit code 2.
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

impl From<crate::samplers::SamplerError> for CliError {
    fn from(e: crate::samplers::SamplerError) -> Self {
        match e {
            crate::samplers::SamplerError::InvalidConfig(msg) => CliError::Validation(msg),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

impl From<crate::targets::TargetError> for CliError {
    fn from(e: crate::targets::TargetError) -> Self {
        match e {
            crate::targets::TargetError::InvalidData(msg) => CliError::Validation(msg),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

/// Default output directory: `SBPS_OUT_DIR` when set, `./sbps-out` otherwise.
pub fn default_out_dir() -> std::path::PathBuf {
    std::env::var_os("SBPS_OUT_DIR")
        .map(std::path::PathBuf::from)
        .unwrap_or_else(|| std::path::PathBuf::from("sbps-out"))
}
