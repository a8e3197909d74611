use thiserror::Error;

use crate::lattice::Dynamics;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dt must be positive (got {0})")]
    NonPositiveStep(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("cell ({row}, {col}) is outside the {rows}x{cols} lattice")]
    OutOfRange {
        row: usize,
        col: usize,
        rows: usize,
        cols: usize,
    },

    #[error("image is empty")]
    EmptyImage,

    #[error("shape mismatch: expected {expected:?}, got {got:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },

    #[error("output value {0} is not in {{-1, 0, +1}}")]
    NonTernary(f64),

    #[error("output value 0 at cell ({row}, {col}) in strict binary mode")]
    NonBinary { row: usize, col: usize },

    #[error("{0:?} dynamics needs a memductance profile")]
    MissingProfile(Dynamics),

    #[error("invalid experiment script: {0}")]
    Script(String),

    #[error("output still gray at t={t}: {cells} undecided cells (increase the switch-off time)")]
    NotConverged { t: f64, cells: usize },

    #[error("{0}")]
    Unsupported(String),

    #[error("malformed image: {0}")]
    Image(String),

    #[error("line {line}: {message}")]
    Config { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
