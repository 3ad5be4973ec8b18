use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("row {row}: expected {expected} fields, found {found}")]
    RaggedRow {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("row {row}, column `{column}`: `{value}` is not a finite number")]
    NonNumeric {
        row: usize,
        column: String,
        value: String,
    },

    #[error("row {row}, column `{column}`: missing value")]
    MissingValue { row: usize, column: String },

    #[error("label column `{0}` not found")]
    UnknownColumn(String),

    #[error("dataset needs at least {needed} rows, found {found}")]
    TooFewRows { needed: usize, found: usize },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("expected exactly 2 classes, found {0}")]
    NotBinary(usize),

    #[error("class `{class}` has {size} instances, need at least {needed}")]
    ClassTooSmall {
        class: String,
        size: usize,
        needed: usize,
    },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("infeasible parameters: {0}")]
    Infeasible(String),

    #[error("covariance of component {0} is not positive definite")]
    NotPositiveDefinite(usize),

    #[error("corpus has no terms")]
    EmptyCorpus,

    #[error("model format: {0}")]
    Format(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
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

    /// Innermost error once stage labels are peeled off.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }

    /// True for errors caused by a parameter choice rather than the data.
    pub fn is_infeasible(&self) -> bool {
        matches!(
            self.root(),
            Error::Infeasible(_) | Error::InvalidParameter(_)
        )
    }
}

pub(crate) trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|source| Error::Stage {
            stage,
            source: Box::new(source),
        })
    }
}
