use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument `{name}`: {reason}")]
    InvalidArgument { name: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("sample is empty")]
    EmptySample,

    #[error("estimator undefined at x = {x:?}: no uncensored mass in the kernel neighbourhood")]
    EstimationUndefined { x: Vec<f64> },

    #[error("bandwidth selection failed: every grid point gave an undefined criterion")]
    SelectionFailed,

    #[error("generation rejected: lifetime at index {index} is {value}, must be positive")]
    GenerationRejected { index: usize, value: f64 },

    #[error(
        "censoring calibration failed: target {target} outside reachable range [{min_cp}, {max_cp}]"
    )]
    CalibrationFailed {
        target: f64,
        min_cp: f64,
        max_cp: f64,
    },

    #[error("oracle unreliable: {rejected} of {drawn} draws violated positivity")]
    OracleUnreliable { rejected: usize, drawn: usize },

    #[error("slope undefined: {0}")]
    SlopeUndefined(String),

    #[error("{failed} of {total} replicates failed (last error: {last})")]
    TooManyFailures {
        failed: usize,
        total: usize,
        last: String,
    },

    #[error("estimator `{0}` not present in grid")]
    MissingEstimate(&'static str),

    #[error("grid carries no truth values")]
    MissingTruth,

    #[error("no defined grid points")]
    NoDefinedPoints,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidArgument {
            name,
            reason: reason.into(),
        }
    }
}
