use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: bad magic, expected {expected:?}")]
    BadMagic { path: PathBuf, expected: &'static str },

    #[error("{path}: truncated, {detail}")]
    Truncated { path: PathBuf, detail: String },

    #[error("{path}: shape {shape:?} declares {declared} values but payload holds {actual}")]
    PayloadMismatch {
        path: PathBuf,
        shape: Vec<usize>,
        declared: usize,
        actual: usize,
    },

    #[error("non-finite value at flat index {index}")]
    NonFinite { index: usize },

    #[error("invalid shape: {reason}")]
    InvalidShape { reason: String },

    #[error("dimension mismatch: {context}")]
    DimensionMismatch { context: String },

    #[error("{path}:{line}: malformed manifest entry: {reason}")]
    MalformedManifest {
        path: PathBuf,
        line: usize,
        reason: String,
    },

    #[error("{path}: malformed sequence tensor: {reason}")]
    MalformedSequence { path: PathBuf, reason: String },

    #[error("inconsistent window length: expected t={expected}, sequence {sequence_id} has t={actual}")]
    InconsistentWindow {
        expected: usize,
        actual: usize,
        sequence_id: String,
    },

    #[error("invalid argument: {reason}")]
    InvalidArgument { reason: String },

    #[error("empty input: {context}")]
    EmptyInput { context: String },

    #[error("training loss became non-finite at epoch {epoch}")]
    NanLoss { epoch: usize },

    #[error("covariance of component {component} is not positive definite")]
    CovarianceNotPd { component: usize },

    #[error("component {component} has total responsibility below {threshold:e}")]
    DegenerateComponent { component: usize, threshold: f64 },

    #[error("EM iteration {iteration} failed: {source}")]
    EmIteration {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("model incompatibility: {context}")]
    ModelMismatch { context: String },

    #[error("labels contain a single class only")]
    SingleClass,

    #[error("scoring sequence {sequence_id} failed: {source}")]
    Scoring {
        sequence_id: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
