use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed waveform data: {0}")]
    Parse(String),

    #[error("invalid waveform: {0}")]
    InvalidTrace(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("distributions are defined on different bin grids")]
    GridMismatch,

    #[error("waveform has no positive area; it cannot be normalized")]
    ZeroArea,

    #[error("parameter `{name}` = {value} is out of range: {expected}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("statistics for the {0} intensity are missing")]
    MissingIntensity(&'static str),

    #[error("expected gain is zero; the error rate is undefined")]
    ZeroGain,

    #[error("single-photon yield lower bound is zero; the error-rate bound is undefined")]
    NoSinglePhotonYield,

    #[error("attack windows overlap")]
    OverlappingWindows,

    #[error("linear program solver failed: {0}")]
    Solver(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn out_of_range(name: &'static str, value: f64, expected: &'static str) -> Self {
        Error::OutOfRange {
            name,
            value,
            expected,
        }
    }
}
