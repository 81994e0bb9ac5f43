use thiserror::Error;

/// Errors raised by the geometry, spinor, discretization and solver layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("point outside the metric's domain: {0}")]
    DomainError(String),

    #[error("frame mismatch: field refers to `{field}`, operator uses `{metric}`")]
    FrameMismatch { field: String, metric: String },

    #[error("conformal factor is not positive ({0})")]
    NonpositiveConformalFactor(f64),

    #[error("fiber warp is not positive ({0})")]
    NonpositiveWarp(String),

    #[error("requested range is outside the grid: {0}")]
    RangeError(String),

    #[error("no convergence after {iterations} iterations (relative residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("field is not harmonic: discrete Dirac residual {residual:.3e} exceeds {threshold:.1e}")]
    NotHarmonic { residual: f64, threshold: f64 },

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("configuration error: {0}")]
    ConfigError(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
