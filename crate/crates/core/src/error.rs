use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the co-clustering library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error in {file} line {line}: {message}")]
    Parse {
        file: String,
        line: usize,
        message: String,
    },

    #[error("image {image} references {domain} patch {index} but only {count} exist")]
    DanglingReference {
        image: String,
        domain: &'static str,
        index: usize,
        count: usize,
    },

    #[error("dimension mismatch: expected {expected}, found {found} ({context})")]
    DimensionMismatch {
        expected: usize,
        found: usize,
        context: String,
    },

    #[error("image {0} has no timestamp")]
    MissingTimestamp(String),

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("cannot normalize a zero vector")]
    ZeroVector,

    #[error("feature ratio must be positive, got {0}")]
    NonPositiveRatio(f64),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("cluster {0} is empty")]
    EmptyCluster(usize),

    #[error("requested {k} clusters but only {n} items are available")]
    TooManyClusters { k: usize, n: usize },

    #[error("constraints are infeasible: {0}")]
    Infeasible(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("at least {needed} points are required, got {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("ground truth is not available")]
    MissingGroundTruth,

    #[error("invalid matrix dump: {0}")]
    MatrixFormat(String),

    #[error("csv output failed: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
