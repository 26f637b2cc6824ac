//! Crate-wide error type.

use thiserror::Error;

/// Errors produced anywhere in the simulator.
///
/// The three variants map onto the CLI exit codes: configuration and
/// input-file problems exit with 2, pipeline diagnostics (a stage that ran
/// but failed its own health check, e.g. a diverging loop) exit with 3.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration, parameters, or malformed input data.
    #[error("config error: {0}")]
    Config(String),
    /// A processing stage detected that its own output is unusable.
    #[error("pipeline diagnostic: {0}")]
    Diagnostic(String),
    /// File-system problem while reading or writing artifacts.
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn diagnostic(msg: impl Into<String>) -> Self {
        Error::Diagnostic(msg.into())
    }

    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code the CLI reports for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Io { .. } => 2,
            Error::Diagnostic(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
