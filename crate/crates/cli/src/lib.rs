//! Batch driver: tables for the dispersion relation, branches, spectra along
//! branches, stability regions and symbols, plus the verification suites.

pub mod app;
pub mod commands;
pub mod config;
mod output;

pub use config::{Flags, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("continuation failed: {0}")]
    Convergence(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Solver(#[from] wavestab::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Convergence(_) => 2,
            Self::Verification(_) => 3,
            Self::Config(_) => 4,
            Self::Io(_) | Self::Csv(_) | Self::Json(_) | Self::Solver(_) => 1,
        }
    }
}
