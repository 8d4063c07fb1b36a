use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("quadrature did not converge: estimate {value:e}, error estimate {error:e}")]
    QuadratureNonConvergence { value: f64, error: f64 },

    #[error("root finder failed to meet tolerance (residual {residual:e}): {context}")]
    Tolerance { residual: f64, context: String },

    #[error("no sign change bracketing the root: {0}")]
    Bracket(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("inconclusive classification for {condition}: tail slope {slope:.4} within the critical band")]
    Inconclusive { condition: &'static str, slope: f64 },

    #[error("overflow at r = {radius}: W exceeded {limit:e}")]
    Overflow { radius: f64, limit: f64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("Newton iteration diverged at step {step} (t = {time}): residual {residual:e}")]
    NewtonDivergence {
        step: usize,
        time: f64,
        residual: f64,
    },

    #[error("monotonicity violated between n = {n_lo} and n = {n_hi}: margin {margin:e}")]
    Monotonicity { n_lo: f64, n_hi: f64, margin: f64 },

    #[error("no domination: {0}")]
    NoDomination(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("insufficient range: {0}")]
    InsufficientRange(String),

    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;
