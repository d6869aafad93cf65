use std::path::PathBuf;

use thiserror::Error;

/// Errors surfaced by the library. Structural genome violations are not
/// errors; see [`crate::genome::Violation`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("decode error at byte {offset}: {reason}")]
    Decode { offset: usize, reason: String },

    #[error("{path}: row {row}, column {column}: cannot parse {value:?} as a number")]
    Parse {
        path: PathBuf,
        row: usize,
        column: usize,
        value: String,
    },

    #[error("{path}: row {row} has {found} fields, expected {expected}")]
    Ragged {
        path: PathBuf,
        row: usize,
        found: usize,
        expected: usize,
    },

    #[error("series {name:?} has {rows} rows; at least 2 are required")]
    TooShort { name: String, rows: usize },

    #[error("column mismatch: expected {expected:?}, found {found:?}")]
    Columns {
        expected: Vec<String>,
        found: Vec<String>,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid genome: {0}")]
    InvalidGenome(String),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
