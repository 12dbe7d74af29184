use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is empty")]
    Empty,

    #[error("matrix is not square: {rows} x {cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("negative entry {value} at ({row}, {col})")]
    NegativeEntry { row: usize, col: usize, value: f64 },

    #[error("row {row} sums to {sum}, expected 1")]
    NotStochastic { row: usize, sum: f64 },

    #[error("diagonal entry of node {node} is not strictly positive")]
    ZeroDiagonal { node: usize },

    #[error("support graph is not strongly connected: node {node} is unreachable")]
    NotIrreducible { node: usize },

    #[error("conductance matrix is not symmetric at ({row}, {col})")]
    NotSymmetric { row: usize, col: usize },

    #[error("network is disconnected")]
    Disconnected,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not reversible (max asymmetry of diag(pi) P is {asymmetry:e})")]
    NotReversible { asymmetry: f64 },

    #[error("matrix is not normal (max |P'P - PP'| is {residual:e})")]
    NotNormal { residual: f64 },

    #[error("linear solve failed: {0}")]
    SolveFailure(String),

    #[error("Stein fixed point did not converge (residual {residual:e})")]
    SteinDivergence { residual: f64 },

    #[error("invalid Cayley generator: {0}")]
    InvalidGenerator(String),

    #[error("invalid circle weights: {0}")]
    InvalidWeights(String),

    #[error("value out of range: {0}")]
    OutOfRange(String),

    #[error("rejection sampling gave up after {attempts} attempts")]
    RejectionExhausted { attempts: usize },

    #[error("could not place node {placed} of {n} at the requested spacing")]
    InfeasibleDensity { placed: usize, n: usize },

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for errors raised by matrix validation rather than by the
    /// environment or configuration.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Empty
                | Error::NotSquare { .. }
                | Error::NonFinite { .. }
                | Error::NegativeEntry { .. }
                | Error::NotStochastic { .. }
                | Error::ZeroDiagonal { .. }
                | Error::NotIrreducible { .. }
                | Error::NotSymmetric { .. }
                | Error::Disconnected
                | Error::NotReversible { .. }
                | Error::NotNormal { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
