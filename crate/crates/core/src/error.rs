use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("point {index} has dimension {got}, expected {expected}")]
    DimensionMismatch {
        index: usize,
        got: usize,
        expected: usize,
    },

    #[error("matrix is not square: {rows} rows but row {row} has {cols} entries")]
    NotSquare {
        rows: usize,
        row: usize,
        cols: usize,
    },

    #[error("matrix entry ({i},{j}) = {value} must equal entry ({j},{i}) = {mirror}")]
    NotSymmetric {
        i: usize,
        j: usize,
        value: f64,
        mirror: f64,
    },

    #[error("matrix entry ({i},{j}) = {value} is negative or not finite")]
    BadEntry { i: usize, j: usize, value: f64 },

    #[error("diagonal entry ({i},{i}) = {value} is not zero")]
    NonzeroDiagonal { i: usize, value: f64 },

    #[error(
        "matrix violates metric axioms ({violations} violation(s); run the validator for details)"
    )]
    InvalidMetric { violations: usize },

    #[error("point index {index} out of range for {n} points")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("k = {k} is invalid for an instance with {n} points")]
    InvalidK { k: usize, n: usize },

    #[error("instance with n = {n} exceeds the exhaustive-search cap of {cap}")]
    SizeCap { n: usize, cap: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid clustering: {0}")]
    InvalidClustering(String),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("internal invariant violated: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
