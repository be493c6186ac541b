use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: String,
    },

    #[error("horizontal index {index} out of range 0..{m1}")]
    FrameIndex { index: usize, m1: usize },

    #[error("group self-check failed: {0}")]
    GroupCheck(String),

    #[error("profile is not weakly {p}-coercive: {reason}")]
    NotCoercive { p: f64, reason: String },

    #[error("profile has no admissible exponent interval")]
    NoInterval,

    #[error("missing derivative: {0}")]
    MissingDerivative(&'static str),

    #[error("point is outside the lattice interior (margin {margin})")]
    OutsideLattice { margin: f64 },

    #[error("quadrature did not converge on [{a}, {b}] (error estimate {err:e})")]
    Quadrature { a: f64, b: f64, err: f64 },

    #[error("integrand is not integrable at 0+ (fitted exponent {exponent})")]
    NotIntegrableAtZero { exponent: f64 },

    #[error("K is bounded by {bound:e}: it does not map onto [0, inf)")]
    KBounded { bound: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("parameter {constraint} violated (residual {residual})")]
    OutOfRange { constraint: String, residual: f64 },

    #[error("degenerate case {0}")]
    Degenerate(String),

    #[error("pasting hypothesis violated at {point:?}: outer {outer} < inner {inner}")]
    PastingBoundary {
        point: Vec<f64>,
        outer: f64,
        inner: f64,
    },

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("ODE integration failed at t = {t}: {reason}")]
    Ode { t: f64, reason: String },

    #[error("io: {0}")]
    Io(String),

    #[error("format: {0}")]
    Format(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
