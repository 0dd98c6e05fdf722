use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch for {what}: expected {expected}, got {actual}")]
    Dimension {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("sequence length mismatch: {0}")]
    Length(String),

    #[error("invalid time window: k2 = {k2} precedes k1 = {k1}")]
    Window { k1: i64, k2: i64 },

    #[error("insufficient data: {what} requires {required} samples, have {available}")]
    InsufficientData {
        what: &'static str,
        required: usize,
        available: usize,
    },

    #[error("empty matrix")]
    EmptyMatrix,

    #[error("input data not persistently exciting: {0}")]
    NotPersistentlyExciting(String),

    #[error("rank deficient {what}: rank {rank} of {expected}")]
    RankDeficient {
        what: &'static str,
        rank: usize,
        expected: usize,
        singular_values: Vec<f64>,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("quadratic program did not converge after {iterations} iterations")]
    QpIterationLimit {
        iterations: usize,
        best: Vec<f64>,
        objective: f64,
    },

    #[error("quadratic program is unbounded below")]
    QpUnbounded,

    #[error("quadratic program is infeasible: {0}")]
    QpInfeasible(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("plot rendering failed: {0}")]
    Plot(String),

    #[error("matrix decomposition failed: {0}")]
    Decomposition(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn check_dim(what: &'static str, expected: usize, actual: usize) -> Result<()> {
        if expected == actual {
            Ok(())
        } else {
            Err(Error::Dimension {
                what,
                expected,
                actual,
            })
        }
    }
}
