//! Shared error type for map/checkpoint IO, config handling and CSV artifacts.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("io error on '{path}': {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// Structurally invalid binary payload (bad magic, bad version, short read).
    #[error("parse error at byte {offset}: {reason}")]
    Parse { offset: u64, reason: String },

    /// Header and payload disagree about shape, or a payload does not match
    /// the consumer's expected dimensions.
    #[error("schema error: expected {expected}, found {actual}")]
    Schema { expected: String, actual: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("csv error in '{path}' line {line}: {reason}")]
    Csv {
        path: String,
        line: usize,
        reason: String,
    },

    /// Comparison inputs disagree on sampling or schema.
    #[error("compare error: {0}")]
    Compare(String),
}

impl CoreError {
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        CoreError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(offset: u64, reason: impl Into<String>) -> Self {
        CoreError::Parse {
            offset,
            reason: reason.into(),
        }
    }

    pub fn schema(expected: impl Into<String>, actual: impl Into<String>) -> Self {
        CoreError::Schema {
            expected: expected.into(),
            actual: actual.into(),
        }
    }
}
