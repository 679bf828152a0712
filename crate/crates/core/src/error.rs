use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("trace line {line}: {message}")]
    TraceParse { line: u64, message: String },

    #[error("trace has {0} samples, at least 4 are required")]
    TooFewSamples(usize),

    #[error("load {load} at t={time} h is outside [0, 1]")]
    LoadOutOfRange { time: f64, load: f64 },

    #[error("spline system is singular: {0}")]
    SingularSpline(String),

    #[error("could not synthesize a profile with mean {target} after {attempts} attempts")]
    InfeasibleTarget { target: f64, attempts: usize },

    #[error("malformed allocation instance: {0}")]
    MalformedInstance(String),

    #[error("enumeration bound exceeded: {0}")]
    BoundExceeded(String),

    #[error("baseline profit is zero at step {step}")]
    UndefinedBaseline { step: usize },

    #[error("config: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
