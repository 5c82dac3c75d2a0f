//! Experiment orchestration for `slideregret`: configuration, the parallel
//! run loop, CSV/JSON persistence and the analysis pass.

pub mod analyze;
pub mod config;
pub mod experiment;
pub mod output;

use std::fmt;

/// Error carrying the process exit code the CLI should return.
#[derive(Debug)]
pub struct ExitError {
    pub code: u8,
    pub message: String,
}

impl ExitError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }
}

impl fmt::Display for ExitError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for ExitError {}
