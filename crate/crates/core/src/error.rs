use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed IDX file {path}: {reason}")]
    Idx { path: PathBuf, reason: String },

    #[error("{path}:{line}: {reason}")]
    Parse {
        path: PathBuf,
        line: usize,
        reason: String,
    },

    #[error("invalid dataset: {0}")]
    Dataset(String),

    #[error("invalid split: train count {k} must be below the {total} available instances")]
    Split { k: usize, total: usize },

    #[error("variable {name}: lower bound {lower} exceeds upper bound {upper}")]
    BoundInversion {
        name: String,
        lower: i64,
        upper: i64,
    },

    #[error("duplicate variable name {0}")]
    DuplicateName(String),

    #[error("unknown variable {0}")]
    UnknownVariable(String),

    #[error("assignment does not cover variable {0}")]
    PartialAssignment(String),

    #[error("value {value} of variable {name} is outside its bounds")]
    OutOfBounds { name: String, value: i64 },

    #[error("assignment is infeasible (violates {0} constraints)")]
    Infeasible(usize),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("coefficient overflow while {0}")]
    Overflow(String),

    #[error("invalid hyperparameters: {0}")]
    Hyperparams(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("invalid model file: {0}")]
    ModelFile(String),

    #[error("enumeration space of {size} points exceeds the cap of {cap}")]
    OracleCap { size: u128, cap: u128 },

    #[error("LP solver failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, reason: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            reason: reason.into(),
        }
    }
}
