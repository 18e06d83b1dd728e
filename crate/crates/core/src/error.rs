//! Crate-wide error type.

use std::path::PathBuf;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Tensor/vector dimensions do not line up.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// A caller-supplied value is outside the operation's domain.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// An operation was invoked in the wrong order (e.g. backward before forward).
    #[error("invalid state: {0}")]
    InvalidState(String),

    /// The local optimization produced a non-finite loss.
    #[error("optimization diverged at iteration {iter}: {detail}")]
    Diverged { iter: usize, detail: String },

    /// A protocol rule was violated (unknown sender, layout mismatch, ...).
    #[error("protocol: {0}")]
    Protocol(String),

    /// Malformed or truncated wire data.
    #[error("decode: {0}")]
    Decode(String),

    /// The underlying transport failed.
    #[error("transport: {0}")]
    Transport(String),

    /// Input data is too degenerate for the requested fit.
    #[error("degenerate data: {0}")]
    DegenerateData(String),

    /// Rank correlation is undefined (a constant input grid).
    #[error("undefined correlation: {0}")]
    UndefinedCorrelation(String),

    /// Bad experiment configuration.
    #[error("configuration: {0}")]
    Config(String),

    /// A node-update callback failed; carries the protocol round for context.
    #[error("node update failed at round {round}: {source}")]
    NodeUpdate {
        round: u32,
        #[source]
        source: Box<Error>,
    },

    /// An experiment stage failed; names the module and round for context.
    #[error("{module} failed at round {round}: {source}")]
    Run {
        module: &'static str,
        round: u32,
        #[source]
        source: Box<Error>,
    },

    /// Filesystem failure, annotated with the path involved.
    #[error("io error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
