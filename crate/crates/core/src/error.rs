use std::path::PathBuf;

/// Unified error type for the library. The CLI maps these onto exit codes,
/// so variants are grouped by failure class rather than by module.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Malformed input row. `line` is 1-based and counts every physical line,
    /// including the header and comment lines.
    #[error("{path}:{line}: {msg}")]
    Parse { path: PathBuf, line: u64, msg: String },

    /// Structurally valid input that violates a data contract
    /// (non-monotone timestamps, duplicate dates, missing columns).
    #[error("data error: {0}")]
    Data(String),

    /// Invalid configuration supplied by the caller.
    #[error("config error: {0}")]
    Config(String),

    /// Argument outside an operation's domain (non-positive sigma,
    /// out-of-range time index, empty input).
    #[error("domain error: {0}")]
    Domain(String),

    /// Iterative fit failed: non-convergence, singular Jacobian, or too few
    /// usable points. Carries enough trace to diagnose without re-running.
    #[error("fit error: {0}")]
    Fit(String),

    /// Adaptive quadrature could not reach the requested tolerance.
    #[error("quadrature error: {0}")]
    Quadrature(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// I/O error carrying the path it concerns.
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
