use std::path::PathBuf;

/// Broad failure class, used by front ends to pick an exit status.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Data,
    Numeric,
    Dimension,
    Contract,
    Io,
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension error at {node}: {detail}")]
    Dimension { node: String, detail: String },

    #[error("contract violated: {0}")]
    Contract(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("missing file: {}", .0.display())]
    MissingFile(PathBuf),

    #[error("row count mismatch: view `{view}` has {found} rows, expected {expected}")]
    RowCountMismatch {
        view: String,
        expected: usize,
        found: usize,
    },

    #[error("column count mismatch in {file} line {line}: expected {expected} values, found {found}")]
    ColumnCountMismatch {
        file: String,
        line: usize,
        expected: usize,
        found: usize,
    },

    #[error("non-finite value in {file} line {line}")]
    NonFinite { file: String, line: usize },

    #[error("label {label} on line {line} is outside [0, {classes})")]
    LabelOutOfRange {
        line: usize,
        label: i64,
        classes: usize,
    },

    #[error("parse error in {file} line {line}: {detail}")]
    Parse {
        file: String,
        line: usize,
        detail: String,
    },

    #[error("malformed metadata: {0}")]
    Meta(String),

    #[error("stratification error: {0}")]
    Stratification(String),

    #[error("no ground truth labels available for {0}")]
    NoGroundTruth(String),

    #[error("training error: non-finite gradient for parameter `{0}`")]
    NonFiniteGradient(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Config(_) => ErrorKind::Config,
            Error::Dimension { .. } => ErrorKind::Dimension,
            Error::Contract(_) => ErrorKind::Contract,
            Error::NonFiniteGradient(_) | Error::Numeric(_) => ErrorKind::Numeric,
            Error::Io { .. } => ErrorKind::Io,
            Error::MissingFile(_)
            | Error::RowCountMismatch { .. }
            | Error::ColumnCountMismatch { .. }
            | Error::NonFinite { .. }
            | Error::LabelOutOfRange { .. }
            | Error::Parse { .. }
            | Error::Meta(_)
            | Error::Stratification(_)
            | Error::NoGroundTruth(_) => ErrorKind::Data,
        }
    }

    pub(crate) fn dim(node: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::Dimension {
            node: node.into(),
            detail: detail.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
