use std::path::PathBuf;

/// Errors produced by the memvol library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("t = {t} is outside the curve domain [{min}, {max}]")]
    OutOfDomain { t: f64, min: f64, max: f64 },

    #[error("{}: line {line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("knot times must be strictly increasing (row {index}: {prev} then {next})")]
    NonMonotoneTime { index: usize, prev: f64, next: f64 },

    #[error("volatility must be positive, got {value} at t = {t}")]
    NonPositiveVolatility { t: f64, value: f64 },

    #[error("kernel lag must be nonnegative, got {0}")]
    NegativeLag(f64),

    #[error("interval is reversed: s = {s} > t = {t}")]
    ReversedInterval { s: f64, t: f64 },

    #[error("observation window t - t0 = {0} is too small")]
    DegenerateWindow(f64),

    #[error("operation requires a gaussian kernel")]
    WrongKernelFamily,

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error(
        "Picard iteration did not converge after {iterations} iterations (last change {change:e})"
    )]
    NoConvergence { iterations: usize, change: f64 },

    #[error("need at least 2 samples, got {0}")]
    TooFewSamples(usize),

    #[error("need at least 100 paths, got {0}")]
    TooFewPaths(usize),

    #[error("PDE grid too coarse: refinement error estimate {estimate:e} exceeds 10x tolerance {tolerance:e}")]
    GridTooCoarse { estimate: f64, tolerance: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("grid point {index}: {source}")]
    AtGridPoint {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
