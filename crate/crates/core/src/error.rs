use thiserror::Error;

/// Errors raised across the lab.
#[derive(Debug, Error)]
pub enum LabError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("grid mismatch between operands")]
    GridMismatch,
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid frame: {0}")]
    InvalidFrame(String),
    #[error("tau = {tau} outside (0, {max}]")]
    TauOutOfRange { tau: f64, max: f64 },
    #[error("invalid cutoff radii: {0}")]
    InvalidCutoff(String),
    #[error("{clamped} clamped modes exceed the limit of {limit}")]
    TooManyClamped { clamped: usize, limit: usize },
    #[error("coefficient piece {index}: {reason}")]
    Coefficient { index: usize, reason: String },
    #[error("iteration is not contracting at h = {h} (ratio {ratio:.3})")]
    NonContraction { h: f64, ratio: f64 },
    #[error("no convergence after {iterations} iterations at h = {h}")]
    MaxIterExceeded { h: f64, iterations: usize },
    #[error("exponent window violated: {0}")]
    WindowViolation(String),
    #[error("unknown check `{0}`")]
    UnknownCheck(String),
    #[error("frame mismatch: {0}")]
    FrameMismatch(String),
    #[error("curl test failed: relative curl {0:e}")]
    CurlTest(f64),
    #[error("component {component} has nonzero mean {mean:e}")]
    NonZeroMean { component: usize, mean: f64 },
    #[error("fit needs at least {needed} points, got {got}")]
    Underdetermined { needed: usize, got: usize },
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, LabError>;
