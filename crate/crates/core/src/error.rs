use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("catalog parse error at line {line}, column {column}: {message}")]
    CatalogParse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("catalog conflict: token {token:?} claimed by both {first:?} and {second:?}")]
    CatalogConflict {
        token: String,
        first: String,
        second: String,
    },

    #[error("invalid catalog: {0}")]
    InvalidCatalog(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("malformed {what} at line {line}: {message}")]
    Format {
        what: &'static str,
        line: usize,
        message: String,
    },

    #[error("archive {}: {message}", path.display())]
    Archive { path: PathBuf, message: String },

    #[error("corpus is empty")]
    EmptyCorpus,

    #[error("subset of size {size} exceeds cap {cap}")]
    OversizedSubset { size: usize, cap: usize },

    #[error("enumeration refused: more than {budget} nodes required")]
    BudgetExceeded { budget: u64 },

    #[error("zero denominator: {0}")]
    ZeroDenominator(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short stable label used in machine-readable diagnostics.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::CatalogParse { .. } => "catalog-parse",
            Error::CatalogConflict { .. } => "catalog-conflict",
            Error::InvalidCatalog(_) => "catalog-invalid",
            Error::InvalidArgument(_) => "invalid-argument",
            Error::Io { .. } => "io",
            Error::Format { .. } => "format",
            Error::Archive { .. } => "archive",
            Error::EmptyCorpus => "empty-corpus",
            Error::OversizedSubset { .. } => "oversized-subset",
            Error::BudgetExceeded { .. } => "budget-exceeded",
            Error::ZeroDenominator(_) => "zero-denominator",
        }
    }
}
