use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Broad failure class, used by the command line to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Usage,
    Data,
    Io,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: malformed row: {reason}")]
    MalformedRow {
        path: PathBuf,
        line: usize,
        reason: String,
    },

    #[error("{path}: dataset file contains no series")]
    EmptyDataset { path: PathBuf },

    #[error("series too short: {len} finite value(s), need at least 2{}", location(.path, .line))]
    SeriesTooShort {
        len: usize,
        path: Option<PathBuf>,
        line: Option<usize>,
    },

    #[error("class {label:?} has a zero train count")]
    EmptyClass { label: String },

    #[error("value {value} is outside [0, 1]")]
    OutOfRange { value: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("output directory {path} is not writable: {reason}")]
    OutputNotWritable { path: PathBuf, reason: String },

    #[error("missing images: {0}")]
    MissingImages(String),

    #[error("label collision: {0}")]
    LabelCollision(String),

    #[error("unknown label {label:?}")]
    UnknownLabel { label: String },

    #[error("duplicate image path {path:?}")]
    DuplicateImagePath { path: String },

    #[error("{count} test record(s) have no prediction (first: {first})")]
    MissingPredictions { count: usize, first: String },

    #[error("prediction {label:?} for {image_path} lies outside dataset {dataset}")]
    OutOfScopePrediction {
        image_path: String,
        label: String,
        dataset: String,
    },

    #[error("sequence must not be empty")]
    EmptySequence,

    #[error("window {window} cannot align lengths {len_a} and {len_b}")]
    WindowInfeasible {
        window: usize,
        len_a: usize,
        len_b: usize,
    },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("model has no training items")]
    EmptyModel,

    #[error("{path}:{line}: {reason}")]
    Parse {
        path: PathBuf,
        line: usize,
        reason: String,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("png: {0}")]
    Png(#[from] png::EncodingError),
}

fn location(path: &Option<PathBuf>, line: &Option<usize>) -> String {
    match (path, line) {
        (Some(p), Some(l)) => format!(" ({}:{l})", p.display()),
        (Some(p), None) => format!(" ({})", p.display()),
        _ => String::new(),
    }
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Io { .. } | Error::OutputNotWritable { .. } | Error::Png(_) => ErrorKind::Io,
            Error::Csv(e) if e.is_io_error() => ErrorKind::Io,
            Error::InvalidConfig(_) => ErrorKind::Usage,
            _ => ErrorKind::Data,
        }
    }
}
