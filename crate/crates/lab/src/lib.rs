//! Experiment driver for `stekloff-core`: TOML configuration, mesh files,
//! CSV reports and the commands behind the `stekloff` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod meshio;
pub mod report;

pub use config::ExperimentConfig;

#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("mesh file error: {0}")]
    MeshFile(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error(transparent)]
    Core(#[from] stekloff_core::Error),
}

impl LabError {
    /// Process exit code: 1 for configuration and input problems, 2 for
    /// numerical failures.
    pub fn exit_code(&self) -> u8 {
        match self {
            LabError::Config(_) | LabError::MeshFile(_) | LabError::Io(_) => 1,
            LabError::Solver(_) | LabError::Core(_) => 2,
        }
    }
}
