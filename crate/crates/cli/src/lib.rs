//! Experiment harness for egp-core: configuration, seeded multi-run
//! execution, result persistence and summary reports.

pub mod config;
pub mod experiment;
pub mod results;
pub mod selftest;
pub mod summary;
pub mod synthetic;

use std::path::PathBuf;

pub use config::{DatasetSpec, ExperimentConfig, Method, PlotExclude};
pub use experiment::{derive_seed, run_experiment, run_loaded, run_one, ExperimentOutput, RunArtifacts};
pub use results::RunResult;
pub use summary::{summarize, Report};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("invariant violation: {0}")]
    Invariant(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    /// Process exit status: 1 usage, 2 data/io, 3 invariant violation.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) | CliError::Io { .. } => 2,
            CliError::Invariant(_) => 3,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<egp_core::Error> for CliError {
    fn from(e: egp_core::Error) -> Self {
        match e {
            egp_core::Error::Config(m) => CliError::Usage(m),
            e if e.is_data_error() => CliError::Data(e.to_string()),
            e => CliError::Invariant(e.to_string()),
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Data(e.to_string())
    }
}
