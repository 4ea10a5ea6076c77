//! Crate-wide error type.

use std::path::PathBuf;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("action {action} outside action space of size {size}")]
    InvalidAction { action: u64, size: u64 },

    #[error("episode already finished; call reset")]
    EpisodeFinished,

    #[error("invalid environment params: {0}")]
    InvalidParams(String),

    #[error("environment not initialized; call reset first")]
    NotInitialized,

    #[error("simulator error: {0}")]
    Simulator(String),

    #[error("unsupported approximator: {0}")]
    UnsupportedApproximator(String),

    #[error("empty buffer")]
    EmptyBuffer,

    #[error("config syntax error at line {line}, column {column}: {message}")]
    ConfigSyntax {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid config at `{path}`: {message}")]
    ConfigInvalid { path: String, message: String },

    #[error("missing agent `{0}` in joint action")]
    MissingAgent(String),

    #[error("collection failed on worker {worker}: {cause}")]
    CollectionFailed { worker: usize, cause: String },

    #[error("persistence error: {0}")]
    Persistence(String),

    #[error("checkpoint version mismatch: found {found}, expected {expected}")]
    VersionMismatch { found: u64, expected: u64 },

    #[error("config digest mismatch: checkpoint belongs to a different config")]
    ConfigMismatch,

    #[error("inconsistent state: {0}")]
    InconsistentState(String),

    #[error("value iteration did not converge within {0} sweeps")]
    NoConvergence(u64),

    #[error("render mode unsupported for this environment")]
    RenderUnsupported,

    #[error("invalid frame: {0}")]
    InvalidFrame(String),

    #[error("recorder already finalized")]
    RecorderClosed,

    #[error("invalid log record: {0}")]
    InvalidRecord(String),

    #[error("log error: {0}")]
    Log(String),

    #[error("report error at line {line}: {message}")]
    Report { line: usize, message: String },

    #[error("grid search requires discrete value lists; `{0}` is a range")]
    InvalidSpaceForGrid(String),

    #[error("invalid variant `{label}`: {message}")]
    InvalidVariant { label: String, message: String },

    #[error("tuning failed; all candidates failed: {0:?}")]
    TuneFailed(Vec<String>),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("{context}: {source}")]
    RunContext {
        context: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn with_context(self, context: impl Into<String>) -> Self {
        Error::RunContext {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// Exit-code class for the CLI: 2 for configuration/usage, 1 otherwise.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::ConfigSyntax { .. }
                | Error::ConfigInvalid { .. }
                | Error::InvalidSpaceForGrid(_)
                | Error::InvalidVariant { .. }
        )
    }
}
