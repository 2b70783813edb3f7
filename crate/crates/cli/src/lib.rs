//! Scenario runner for `abgauge-core`: loads JSON scenarios, runs named identity
//! checks and writes JSON, text and CSV outputs.

pub mod checks;
pub mod export;
pub mod report;
pub mod scenario;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("schema error: {0}")]
    Schema(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error(transparent)]
    Core(#[from] abgauge_core::Error),
}

impl CliError {
    /// Process exit code; check failures (1) are not errors.
    pub fn exit_code(&self) -> i32 {
        2
    }
}

pub use checks::{run_all, CheckName};
pub use report::Report;
pub use scenario::{canonical, load, parse, Overrides, Scenario};
