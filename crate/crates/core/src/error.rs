use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Broad failure category, used by the CLI to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Usage,
    Data,
    Runtime,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot write {path}: {source}")]
    Output {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("invalid schema: {0}")]
    Schema(String),

    #[error("file has no header row: {0}")]
    MissingHeader(PathBuf),

    #[error("header is missing column \"{0}\"")]
    MissingColumn(String),

    #[error("column \"{0}\" appears more than once in the header")]
    DuplicateColumn(String),

    #[error("row {row}: expected {expected} cells, found {found}")]
    RaggedRow {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("row {row}, column \"{column}\": {reason}")]
    InvalidCell {
        row: usize,
        column: String,
        reason: String,
    },

    #[error("row {row}: label {value:?} is outside 0..{n_classes}")]
    InvalidLabel {
        row: usize,
        value: String,
        n_classes: usize,
    },

    #[error("column \"{0}\" is entirely missing")]
    EmptyColumn(String),

    #[error("empty dataset")]
    EmptyDataset,

    #[error("single-class dataset")]
    SingleClass,

    #[error("class {class} has {count} members, fewer than the {k} folds requested")]
    InsufficientClass { class: usize, count: usize, k: usize },

    #[error("dimension mismatch: expected {expected} features, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("label {label} is outside 0..{n_classes}")]
    LabelOutOfDomain { label: usize, n_classes: usize },

    #[error("length mismatch: {left} truths vs {right} predictions")]
    LengthMismatch { left: usize, right: usize },

    #[error("unknown model name \"{0}\"")]
    UnknownModel(String),

    #[error("unknown report format \"{0}\"")]
    UnknownFormat(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("fold {fold}: {source}")]
    Fold {
        fold: usize,
        #[source]
        source: Box<Error>,
    },

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

    pub(crate) fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Fold { source, .. } | Error::Stage { source, .. } => source.kind(),
            Error::UnknownModel(_) | Error::UnknownFormat(_) | Error::Config(_) => ErrorKind::Usage,
            Error::Io { .. }
            | Error::Csv(_)
            | Error::Json(_)
            | Error::Schema(_)
            | Error::MissingHeader(_)
            | Error::MissingColumn(_)
            | Error::DuplicateColumn(_)
            | Error::RaggedRow { .. }
            | Error::InvalidCell { .. }
            | Error::InvalidLabel { .. }
            | Error::EmptyColumn(_)
            | Error::EmptyDataset
            | Error::SingleClass
            | Error::InsufficientClass { .. } => ErrorKind::Data,
            Error::DimensionMismatch { .. }
            | Error::Output { .. }
            | Error::InvalidParameter(_)
            | Error::NonFinite(_)
            | Error::LabelOutOfDomain { .. }
            | Error::LengthMismatch { .. } => ErrorKind::Runtime,
        }
    }
}
