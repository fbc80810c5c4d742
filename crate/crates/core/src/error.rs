use std::io;

use thiserror::Error;

/// Errors from the database and itemset model.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected} attributes, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("attribute {attr} outside 1..={d}")]
    AttributeOutOfRange { attr: usize, d: usize },

    #[error("database must have at least one row and one column (got {n}x{d})")]
    EmptyDatabase { n: usize, d: usize },

    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("binary database: {0}")]
    Binary(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
