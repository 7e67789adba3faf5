//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller violated an operation's precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// An input was rejected by a physical validity gate (e.g. a lighting
    /// sample whose irradiance goes negative over too much of the sphere).
    #[error("rejected input: {0}")]
    Validity(String),

    /// A least-squares or covariance fit could not be completed.
    #[error("fit failed: {0}")]
    Fit(String),

    /// Training diverged or hit a non-finite loss.
    #[error("training failed at step {step}: {msg}")]
    Training { step: usize, msg: String },

    /// Corpus generation failed for a specific sample.
    #[error("generation failed for sample {id}: {source}")]
    Generation { id: String, source: Box<Error> },

    /// A file could not be parsed; `context` names the file and the byte
    /// offset or line number where parsing stopped.
    #[error("parse error at {context}: {msg}")]
    Parse { context: String, msg: String },

    /// A persisted file declares a format version this build does not read.
    #[error("unsupported format version: {0}")]
    Version(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// Exit code class for the CLI: 1 for validation-type errors, 2 for
    /// I/O and parse errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io(_) | Error::Parse { .. } | Error::Version(_) => 2,
            Error::Generation { source, .. } => source.exit_code(),
            _ => 1,
        }
    }
}
