use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("eigensolver did not converge on block {block} ({size}x{size})")]
    EigenNonConvergence { block: usize, size: usize },

    #[error("singular value decomposition did not converge on a {rows}x{cols} matrix")]
    SvdNonConvergence { rows: usize, cols: usize },

    #[error("function {function} is undefined at spectrum point(s) {points:?}")]
    Domain {
        function: String,
        points: Vec<Complex64>,
    },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("structural error: {0}")]
    Structural(String),

    #[error("level {level} is beyond the truncation horizon {horizon} and no generator is available")]
    Truncation { level: usize, horizon: usize },

    #[error("eigenvalue {eigenvalue} at level {level} lies within {margin:e} of the branch ray at angle {angle}")]
    Branch {
        level: usize,
        eigenvalue: Complex64,
        angle: f64,
        margin: f64,
    },

    #[error("exponential factorization failed after {attempts} attempts; eigenvalue arguments at level {level}: {arguments:?}")]
    Factorization {
        attempts: usize,
        level: usize,
        arguments: Vec<f64>,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
