use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid specification: {0}")]
    InvalidSpec(String),

    #[error("point {z} lies outside the unit interval")]
    Domain { z: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Shape { expected: usize, got: usize },

    #[error("Gram matrix is numerically singular (min/max eigenvalue {ratio:.3e}); offending basis index {index}")]
    RankDeficient { index: usize, ratio: f64 },

    #[error("covariate is explained by the sieve (residual ratio {ratio:.3e}); efficient information degenerate")]
    Collinear { ratio: f64 },

    #[error("efficient information is degenerate (value {value:.3e})")]
    DegenerateInformation { value: f64 },

    #[error("Fisher block i11 is singular")]
    SingularInformation,

    #[error("no information about the regression parameter: {0}")]
    NoInformation(String),

    #[error("monotone partial likelihood: estimate diverges ({direction})")]
    Separation { direction: String },

    #[error("Newton iteration did not converge after {iterations} iterations; trace {trace:?}")]
    NoConvergence { iterations: usize, trace: Vec<f64> },

    #[error("hazard is not positive: {0}")]
    InvalidHazard(String),

    #[error("least favourable path leaves the parameter space at t = {t}")]
    InvalidPath { t: f64 },

    #[error("empty risk set over cell {cell}")]
    EmptyRisk { cell: usize },

    #[error("at-risk mass s0 = {value:.3e} falls below 1e-12 at t = {t}; shrink the horizon")]
    SupportTruncation { t: f64, value: f64 },

    #[error("density ratio is not finite: {0}")]
    SupportMismatch(String),

    #[error("ill-conditioned span at step {step}")]
    IllConditionedSpan { step: usize },

    #[error("inner maximisation failed at h = {h}: {source}")]
    Inner { h: f64, source: Box<Error> },

    #[error("{failed} of {reps} replications failed at n = {n} (budget 5%); first reason: {reason}")]
    TooManyFailures {
        n: usize,
        failed: usize,
        reps: usize,
        reason: String,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("empty input: {0}")]
    Empty(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
