//! Command-line front end for `aclgait`: config resolution, the `generate`,
//! `simulate` and `compare` commands, and their output files.

pub mod commands;
pub mod config;
pub mod output;

use aclgait::gait::GaitError;
use aclgait::sim::SimError;
use thiserror::Error;

pub use commands::{cmd_compare, cmd_generate, cmd_simulate, Comparison, DisplacementReport};
pub use config::{RawConfig, RunSpec};
pub use output::Manifest;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{context}: {source}")]
    Io {
        context: String,
        source: std::io::Error,
    },
    #[error("pipeline error: {0}")]
    Pipeline(String),
    #[error("trial {index}: {source}")]
    Trial { index: usize, source: Box<CliError> },
}

impl CliError {
    /// 2 for bad input, 3 for failures while running the pipeline or
    /// writing results.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io { .. } | CliError::Pipeline(_) => 3,
            CliError::Trial { source, .. } => source.exit_code(),
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        CliError::Pipeline(e.to_string())
    }
}

impl From<GaitError> for CliError {
    fn from(e: GaitError) -> Self {
        CliError::Pipeline(e.to_string())
    }
}
