//! Front end for the tfloc audits: configuration, UFC1 persistence and
//! CSV/JSON/SVG report emission.

pub mod commands;
pub mod config;
pub mod container;
pub mod output;

use thiserror::Error;

/// Every audit passed.
pub const EXIT_PASS: i32 = 0;
/// An audit failed or a construction was rejected.
pub const EXIT_AUDIT: i32 = 1;
/// Bad flags, configuration or input files.
pub const EXIT_USAGE: i32 = 2;
/// Truncation, budget or I/O trouble.
pub const EXIT_RESOURCE: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] tfloc_core::Error),
    #[error("usage: {0}")]
    Usage(String),
    #[error("malformed input: {0}")]
    Input(String),
    #[error("i/o: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use tfloc_core::Error as E;
        match self {
            CliError::Usage(_) | CliError::Input(_) => EXIT_USAGE,
            CliError::Io(_) => EXIT_RESOURCE,
            CliError::Core(e) => match e {
                E::Truncation { .. } | E::Budget { .. } | E::Resolution(_) => EXIT_RESOURCE,
                E::InvalidArgument(_) | E::EpsilonOutOfRange(_) => EXIT_USAGE,
                _ => EXIT_AUDIT,
            },
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
