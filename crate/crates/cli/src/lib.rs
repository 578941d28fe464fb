//! Library side of the `thicknull` command: configuration, report emission,
//! prior fitting and reference verification.

pub mod commands;
pub mod config;
pub mod effects;
pub mod report;
pub mod verify;

use std::path::PathBuf;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error(transparent)]
    Core(#[from] thicknull_core::Error),
    #[error("I/O error at {}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    /// Process exit code: 2 for configuration and input problems, 3 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } => 3,
            _ => 2,
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

pub(crate) fn read_text(path: &std::path::Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}
