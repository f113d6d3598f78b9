use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("evaluation {ordinal} failed: {source}")]
    Evaluation {
        ordinal: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("geometry leaves the end-plate disc: {0}")]
    OutOfDisc(String),

    #[error("{path}:{line}: field `{field}`: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        field: String,
        message: String,
    },

    #[error("measurement for species {0} is missing")]
    MissingSpecies(usize),

    #[error("duplicate measurement for species {0}")]
    DuplicateSpecies(usize),

    #[error("invalid measurement: {0}")]
    InvalidMeasurement(String),

    #[error("timed out after {0:?} waiting for {1}")]
    Timeout(std::time::Duration, PathBuf),

    #[error("empty training set")]
    EmptyTrainingSet,

    #[error("unknown {kind} `{name}`")]
    Unknown { kind: &'static str, name: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
