use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid model parameters: {0}")]
    InvalidParams(String),

    #[error("degenerate model: epsilon = 0 has no superradiant fixed points")]
    DegenerateModel,

    #[error("unsupported regime: {0}")]
    UnsupportedRegime(String),

    #[error(
        "no real solution for Omega: coupling lambda = {lambda} does not exceed the critical coupling lambda_c = {lambda_c}"
    )]
    NoRealSolution { lambda: f64, lambda_c: f64 },

    #[error("infeasible modulus k = {k:?}: {reason}")]
    InfeasibleModulus { k: f64, reason: String },

    #[error("azimuthal angle undefined at the pole (sx = sy = 0)")]
    PoleSingularity,

    #[error("step size underflow at t = {t} (stiff or singular problem)")]
    StepSizeUnderflow { t: f64 },

    #[error("non-finite state encountered at t = {t}")]
    Divergence { t: f64 },

    #[error("insufficient valid points for a fit: {valid} valid, {required} required")]
    InsufficientPoints {
        valid: usize,
        required: usize,
        /// `(N, reason)` for every rejected sweep entry.
        failures: Vec<(u64, String)>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
