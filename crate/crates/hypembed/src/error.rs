//! Error type shared across the toolkit.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HypError {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("graph is disconnected: no path between {0} and {1}")]
    Disconnected(String, String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("insufficient precision: need about {needed} bits, have {have}")]
    Precision { needed: usize, have: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl HypError {
    /// Process exit code for the CLI: 2 for input errors, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            HypError::Parse { .. }
            | HypError::Invalid(_)
            | HypError::Disconnected(_, _)
            | HypError::Io(_) => 2,
            HypError::Domain(_) | HypError::Numerical(_) | HypError::Precision { .. } => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, HypError>;
