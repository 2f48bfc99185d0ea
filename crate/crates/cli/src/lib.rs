//! Command-line pipeline around the `medflow` library: configuration,
//! CSV ingestion and validation, stage orchestration, reports and run
//! manifests.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod io;
pub mod manifest;
pub mod report;
pub mod stages;
pub mod validate;

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("ingestion error: {0}")]
    Ingest(io::Finding),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{stage} failed: {message}")]
    Compute { stage: &'static str, message: String },
}

impl CliError {
    /// Process exit status for this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Ingest { .. } => 3,
            CliError::Io { .. } => 4,
            CliError::Compute { .. } => 5,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    pub(crate) fn compute(stage: &'static str, e: impl std::fmt::Display) -> Self {
        CliError::Compute { stage, message: e.to_string() }
    }
}
