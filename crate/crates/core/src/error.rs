use thiserror::Error;

/// Errors raised by every module of the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not symmetric at ({row}, {col})")]
    NotSymmetric { row: usize, col: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid breakpoints: {0}")]
    Breakpoints(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("block count {blocks} exceeds the exhaustive limit {limit}; use the heuristic")]
    TooManyBlocks { blocks: usize, limit: usize },

    #[error("exponent r = {0} must be at least 1")]
    Exponent(f64),

    #[error("inconsistent Hölder exponents: 1/p + 1/q = {0} > 1")]
    HolderExponents(f64),

    #[error("invalid motif: {0}")]
    Motif(String),

    #[error("invalid measure: {0}")]
    Measure(String),

    #[error("value {value} outside the closed mean range [{lo}, {hi}]")]
    OutOfRange { value: f64, lo: f64, hi: f64 },

    #[error("supports differ between the two measures")]
    SupportMismatch,

    #[error("invalid profile: {0}")]
    Profile(String),

    #[error("kernel table with {size} entries exceeds limit {limit}")]
    TableTooLarge { size: usize, limit: usize },

    #[error("state space of {size} configurations exceeds limit {limit}")]
    StateSpaceTooLarge { size: f64, limit: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(
        "no start converged (best value {best_value}, residual {residual:.3e} after {iterations} iterations)"
    )]
    NotConverged {
        best_value: f64,
        residual: f64,
        iterations: usize,
        best_profile: Vec<f64>,
    },

    #[error("target {target} lies outside the achievable range [{lo}, {hi}]")]
    Infeasible { target: f64, lo: f64, hi: f64 },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;
