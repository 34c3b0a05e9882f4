//! Front-end errors and their process exit codes.

use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("input row {row}: {message}")]
    Input { row: usize, message: String },
    #[error("{0}")]
    Usage(String),
    #[error("calibration failed: {0}")]
    Calibration(#[from] outlier_core::Error),
}

impl CliError {
    /// 2 for anything the caller got wrong, 3 when the data defeated the
    /// calibration.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Calibration(_) => 3,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
