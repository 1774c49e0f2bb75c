use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("kernel matrix is not positive definite after jitter escalation (max jitter {jitter:e})")]
    NotPositiveDefinite { jitter: f64 },

    #[error("Sobol sequence supports at most {max} dimensions, got {got}")]
    DimensionTooLarge { got: usize, max: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("GKLS geometry infeasible after {attempts} attempts: {reason}")]
    InfeasibleGeometry { attempts: usize, reason: String },

    #[error("inner solver failure: {0}")]
    InnerSolverFailure(String),

    #[error(transparent)]
    Stats(#[from] crate::stats::StatsError),

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("malformed {what} at line {line}: {message}")]
    Format {
        what: &'static str,
        line: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }
}
