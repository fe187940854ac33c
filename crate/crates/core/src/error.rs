use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("source strength alpha is required for this operation")]
    MissingAlpha,

    #[error("negative base {base} raised to non-integer power {exponent}")]
    NegativeBase { base: f64, exponent: f64 },

    #[error("log-weight {log_value} exceeds the overflow cap {cap}; use log_weight_rho")]
    WeightOverflow { log_value: f64, cap: f64 },

    #[error("seed point is not asymptotic: {0}")]
    NotAsymptotic(String),

    #[error("step size underflow at zeta = {zeta} (h = {step})")]
    StepUnderflow { zeta: f64, step: f64 },

    #[error("non-finite state at {location}")]
    NonFinite { location: String },

    #[error("no overshoot/undershoot bracket found for A in [{lo:e}, {hi:e}]")]
    NoBracket { lo: f64, hi: f64 },

    #[error(
        "collocation Newton did not converge after {iterations} iterations (residual {residual:e})"
    )]
    NewtonDiverged { iterations: usize, residual: f64 },

    #[error("tridiagonal solve broke down at row {row}")]
    SolveBreakdown { row: usize },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("candidate outside the admissible class: {0}")]
    Inadmissible(String),

    #[error("window [{lo}, {hi}] not covered: {reason}")]
    Coverage { lo: f64, hi: f64, reason: String },

    #[error("step failed at t = {t}: {source}")]
    StepFailed {
        t: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("no b in the search grid makes the sandwich hold")]
    NoCalibration,

    #[error("quadrature tail not certified: {0}")]
    TailNotCertified(String),

    #[error("I/O error: {0}")]
    Io(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
