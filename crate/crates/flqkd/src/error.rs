use std::path::PathBuf;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An input fell outside the domain an operation is defined on.
    #[error("invalid {name}: {reason}")]
    InvalidParameter {
        name: &'static str,
        reason: String,
    },

    /// A calibration or root-finding step has no solution for the inputs.
    #[error("no solution: {0}")]
    NoSolution(String),

    /// Not enough measurements to form the requested statistic.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// The monitor's true-coincidence signal is too weak to certify the
    /// channel.
    #[error("degenerate monitor signal: {0}")]
    DegenerateSignal(String),

    /// No coincidence peak stands out of the accidental floor.
    #[error("no coincidence peak found: {0}")]
    PeakNotFound(String),

    /// Filesystem failure while reading or writing a data product.
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A data file exists but does not parse as the expected format.
    #[error("malformed {path}: {reason}")]
    Malformed { path: PathBuf, reason: String },

    /// Bad or inconsistent run configuration.
    #[error("config: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
