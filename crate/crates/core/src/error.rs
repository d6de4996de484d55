use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed CSV in {path}: {message}")]
    Csv { path: PathBuf, message: String },

    #[error("{path}: {message}")]
    Dataset { path: PathBuf, message: String },

    #[error("non-numeric value {value:?} at row {row}, column {column:?}")]
    NonNumericCell { row: usize, column: String, value: String },

    #[error("empty dataset")]
    EmptyDataset,

    #[error("validation error: {0}")]
    Validation(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("config parse error at line {line}: {message}")]
    ConfigParse { line: usize, message: String },

    #[error("invalid value for `{field}`: {message}")]
    ConfigField { field: String, message: String },

    #[error("feature selection failed: {0}")]
    Selection(String),

    #[error("training failed: {0}")]
    Training(String),

    #[error("missing feature {feature:?} for module {module:?}")]
    MissingFeature { module: String, feature: String },

    #[error("fewer than 2 arms: {0}")]
    TooFewArms(String),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("undefined ratio: denominator is zero")]
    UndefinedRatio,

    #[error("statistics error: {0}")]
    Statistics(String),

    #[error("trace parse error at line {line}: {message}")]
    Trace { line: usize, message: String },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
