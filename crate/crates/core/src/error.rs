use thiserror::Error;

/// Errors produced by the depth and fitting routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("unsupported dimension p = {0}")]
    UnsupportedDimension(usize),

    #[error("degenerate design: {0}")]
    DegenerateDesign(String),

    #[error("every observation is orthogonal to the projection direction")]
    DirectionDegenerate,

    #[error("response scale MAD(y) is zero (at least half the responses tie at their median)")]
    ZeroScale,

    #[error("response has zero total variation")]
    ZeroVariance,

    #[error("optimizer did not converge after {evaluations} evaluations")]
    OptimizerFailed {
        evaluations: usize,
        trace: Vec<(Vec<f64>, f64)>,
    },
}

impl Error {
    /// True for errors caused by malformed input rather than the data's geometry.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidArgument(_) | Error::DimensionMismatch { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
