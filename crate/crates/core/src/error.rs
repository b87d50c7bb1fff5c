use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("schema error in column `{column}`: {message}")]
    Schema { column: String, message: String },

    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: usize,
        message: String,
    },

    #[error("duplicate grid value {0}")]
    DuplicateGrid(f64),

    #[error("identification error: {0}")]
    Identification(String),

    #[error("degenerate column `{0}`: zero variance")]
    DegenerateColumn(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("numerical failure in {context}: condition ratio {condition:e}")]
    NumericalFailure { context: String, condition: f64 },

    #[error("bootstrap replicate {index}: {source}")]
    Replicate {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Coarse classification used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Data,
    Numeric,
    Config,
    Io,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Schema { .. }
            | Error::Parse { .. }
            | Error::DuplicateGrid(_)
            | Error::Identification(_)
            | Error::DegenerateColumn(_)
            | Error::DegenerateInput(_)
            | Error::LengthMismatch { .. }
            | Error::Csv(_)
            | Error::Json(_) => ErrorKind::Data,
            Error::NumericalFailure { .. } => ErrorKind::Numeric,
            Error::InvalidConfig(_) => ErrorKind::Config,
            Error::Replicate { source, .. } => source.kind(),
            Error::Io(_) => ErrorKind::Io,
        }
    }

    pub(crate) fn schema(column: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Schema {
            column: column.into(),
            message: message.into(),
        }
    }
}
