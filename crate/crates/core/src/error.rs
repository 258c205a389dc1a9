use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A time or parameter fell outside the admissible interval.
    #[error("range error: {0}")]
    Range(String),

    /// Malformed or non-finite input.
    #[error("validation error: {0}")]
    Validation(String),

    /// Every rule fired with zero strength, so normalization is undefined.
    #[error("degenerate firing: all rule strengths are zero")]
    DegenerateFiring,

    #[error("non-finite gradient in epoch {epoch} for parameter {parameter}")]
    NonFiniteGradient { epoch: usize, parameter: usize },

    /// An event handler failed during `run_until`.
    #[error("handler failed on event #{seq} due at t={due}s ({event}): {source}")]
    Handler {
        seq: u64,
        due: f64,
        event: String,
        #[source]
        source: Box<Error>,
    },

    /// A scenario run aborted; wraps the module error with the tick it hit.
    #[error("scenario aborted at tick {tick} (t={time}s): {source}")]
    Scenario {
        tick: usize,
        time: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("parse error in {path}: {message}")]
    Parse { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn range(msg: impl Into<String>) -> Self {
        Error::Range(msg.into())
    }

    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }
}
