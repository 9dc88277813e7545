use thiserror::Error;

/// Errors raised by the numerical routines in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum FracError {
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("fractional order {0} outside the admissible range")]
    InvalidOrder(f64),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("gamma function pole at z = {0}")]
    Pole(f64),

    #[error("power-law fit failed: {0}")]
    FitFailed(String),

    #[error("insufficient decay at box edge: |u| = {edge:e} exceeds {tol:e}")]
    InsufficientDecay { edge: f64, tol: f64 },

    #[error("{what} did not converge: best estimate {best}, achieved mismatch {mismatch:e}")]
    NotConverged {
        what: &'static str,
        best: f64,
        mismatch: f64,
    },

    #[error("evaluation point x = {0} lies on a discontinuity of the sampled function")]
    Discontinuity(f64),

    #[error("extrapolation unstable: {0}")]
    Extrapolation(String),

    #[error("singular system: {0}")]
    Singular(String),

    #[error("Monte Carlo statistics exhausted: {0}")]
    Statistics(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, FracError>;
