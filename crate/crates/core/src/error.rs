//! Error type shared across the crate.
//!
//! Errors carry a coarse class that maps onto process exit codes:
//! usage errors exit 1, validation errors exit 2, runtime failures exit 3.

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GdplError {
    /// API misuse: calling an operation outside its contract
    /// (stepping a finished dialog, backward without forward, ...).
    #[error("usage error: {0}")]
    Usage(String),

    /// Bad input data: unknown domains/slots/acts, malformed files,
    /// config values out of range.
    #[error("validation error: {0}")]
    Validation(String),

    /// I/O failure, annotated with the path involved.
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Anything that goes wrong mid-run (non-finite losses, integrity
    /// failures) that is not a usage or validation problem.
    #[error("runtime error: {0}")]
    Runtime(String),
}

impl GdplError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        GdplError::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the CLI: 1 usage, 2 validation, 3 runtime.
    pub fn exit_code(&self) -> i32 {
        match self {
            GdplError::Usage(_) => 1,
            GdplError::Validation(_) => 2,
            GdplError::Io { .. } | GdplError::Runtime(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, GdplError>;
