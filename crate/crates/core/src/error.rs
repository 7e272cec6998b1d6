use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("point {index} lies outside the ball of radius {radius}")]
    OutsideSupport { index: usize, radius: f64 },

    #[error("degenerate density: no acceptance after {proposals} proposals")]
    DegenerateDensity { proposals: u64 },

    #[error("non-finite value at point {index}")]
    NonFinite { index: usize },

    #[error("conjugate overflow at s = {s}")]
    ConjugateOverflow { s: f64 },

    #[error("conjugate overflow at sample {index} (s = {s})")]
    ConjugateOverflowAt { index: usize, s: f64 },

    #[error("argument {s} outside the differentiable domain")]
    OutsideDomain { s: f64 },

    #[error("conjugate range exceeded: |y| = {norm} > {radius}")]
    ConjugateRangeExceeded { norm: f64, radius: f64 },

    #[error("point outside the grid box")]
    OutsideGrid,

    #[error("inconsistent class bounds: M(0) = {m0} < l = {lower}")]
    InconsistentClassBounds { m0: f64, lower: f64 },

    #[error("unsorted grid")]
    UnsortedGrid,

    #[error("instance not constructible: zero tilt factor at point {index}")]
    NotConstructible { index: usize },

    #[error("optimization failed: {0}")]
    OptimizationFailed(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("experiment failed: {0}")]
    Experiment(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
