use thiserror::Error;

/// Errors raised anywhere in the numerical pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid model parameters: {0}")]
    InvalidParams(String),

    #[error("box side {side} is not an integer multiple of {unit}")]
    NonIntegerBox { side: f64, unit: f64 },

    #[error("point {point:?} lies outside the sampled window")]
    OutOfWindow { point: Vec<f64> },

    #[error("radius shift {shift} rejected: {reason}")]
    RejectedShift { shift: f64, reason: String },

    #[error("grid spacing {h} does not divide box side {side}")]
    NonDivisibleSpacing { h: f64, side: f64 },

    #[error("grid spacing {h} under-resolves the boundary layer (need h <= {required})")]
    UnderResolved { h: f64, required: f64 },

    #[error("region {0} contains no interior grid node")]
    EmptyMask(String),

    #[error("shift {shift} is spectrally unresolved (pivot {pivot:e} at step {step})")]
    UnresolvedShift { shift: f64, pivot: f64, step: usize },

    #[error("solve residual {residual:e} exceeds {tolerance:e} at shift {shift}")]
    SolveResidual {
        shift: f64,
        residual: f64,
        tolerance: f64,
    },

    #[error("window ({lo}, {hi}] holds {count} eigenvalues, above the limit {limit}")]
    TooManyEigenvalues {
        lo: f64,
        hi: f64,
        count: usize,
        limit: usize,
    },

    #[error("certified eigensolve failed on ({lo}, {hi}]: inertia count {expected}, converged {found}")]
    CertificationFailed {
        lo: f64,
        hi: f64,
        expected: usize,
        found: usize,
    },

    #[error("Chebyshev expansion needs {needed} terms, limit is {limit}")]
    DegreeOverflow { needed: usize, limit: usize },

    #[error("evolution norm drift {drift:e} exceeds {tolerance:e}")]
    NormDrift { drift: f64, tolerance: f64 },

    #[error("eigenvalue count {count} exceeds the Weyl ceiling {ceiling} below {energy}")]
    WeylGuardrail {
        count: usize,
        ceiling: usize,
        energy: f64,
    },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("configuration error at line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("invariant violated: {0}")]
    Assertion(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn params(msg: impl Into<String>) -> Self {
        Error::InvalidParams(msg.into())
    }

    pub(crate) fn config(line: usize, msg: impl Into<String>) -> Self {
        Error::Config {
            line,
            message: msg.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
