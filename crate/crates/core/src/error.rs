use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("derivative order {0} not supported (expected 1, 2 or 3)")]
    InvalidOrder(u32),

    #[error("periodized kernel is undefined for alpha = 0")]
    KernelUndefined,

    #[error("breakdown detected at t = {time}: {reason}")]
    BreakdownDetected { time: f64, reason: String },

    #[error("resolution exceeded: {0}")]
    ResolutionExceeded(String),

    #[error("periodization check failed: |phi| at the cell boundary is {ratio:e} of its maximum")]
    PeriodizationError { ratio: f64 },

    #[error("t = {t} is past the breaking time {horizon}")]
    PastBreakingTime { t: f64, horizon: f64 },

    #[error("characteristic root finding did not converge at x = {x} (residual {residual:e})")]
    NoConvergence { x: f64, residual: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
