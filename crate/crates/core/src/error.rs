use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by every stage of the pipeline.
///
/// The CLI maps [`Error::Io`] to exit code 2 and everything else to exit
/// code 1.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: line {line}: {message}")]
    Parse {
        context: String,
        line: usize,
        message: String,
    },

    #[error("duplicate record id {0:?}")]
    DuplicateId(String),

    #[error("invalid split: {0}")]
    Split(String),

    #[error("invalid span {start}..={end}: {reason}")]
    Span {
        start: usize,
        end: usize,
        reason: String,
    },

    #[error("record {record:?}, token {index}: {message}")]
    Alignment {
        record: String,
        index: usize,
        message: String,
    },

    #[error("lookup table: {0}")]
    Table(String),

    #[error("unsupported model format version {found:?} (expected {expected:?})")]
    ModelVersion { found: String, expected: String },

    #[error("model: {0}")]
    Model(String),

    #[error("training: {0}")]
    Training(String),

    #[error("synth: {0}")]
    Synth(String),

    #[error("empty input: {0}")]
    Empty(String),

    #[error("missing input for stage {0}")]
    MissingStage(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for filesystem failures, as opposed to validation failures.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
