use thiserror::Error;

/// Errors reported by plan construction and transform application.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("target accuracy {0} is not in (0, 1)")]
    Accuracy(f64),

    #[error("interpolation order must be at least 1")]
    ZeroOrder,

    #[error("degenerate interval [{lo}, {hi}]")]
    DegenerateInterval { lo: f64, hi: f64 },

    #[error("point {point} lies outside the interval [{lo}, {hi}]")]
    OutsideInterval { point: f64, lo: f64, hi: f64 },

    #[error("invalid node {index}: {reason}")]
    InvalidNode { index: usize, reason: &'static str },

    #[error("invalid exponent {index}: {reason}")]
    InvalidExponent { index: usize, reason: &'static str },

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("kernel is singular at ({y}, {xi})")]
    SingularKernel { y: f64, xi: f64 },

    #[error("index range {start}..{end} exceeds bound {bound}")]
    RangeOutOfBounds { start: usize, end: usize, bound: usize },

    #[error("{0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
