use thiserror::Error;

/// Errors raised by the contamination, inference and privacy-estimation routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("sampler error: {0}")]
    Sampler(String),

    #[error("optimizer did not converge after {iterations} iterations (gradient sup-norm {grad_norm:e})")]
    NonConvergence {
        iterations: usize,
        last: Vec<f64>,
        grad_norm: f64,
    },

    #[error("curvature error: {0}")]
    Curvature(String),

    #[error("degenerate particle cloud: {0}")]
    Degenerate(String),

    #[error("unbounded likelihood ratio (|log d| = {log_ratio:.3} > 50): contamination rate too small for the search domain")]
    UnboundedRatio { log_ratio: f64 },

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("batch quality error: {invalid} of {total} repeats invalid")]
    BatchQuality { invalid: usize, total: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code used by the command-line driver.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Json(_) => 2,
            Error::BatchQuality { .. } => 4,
            Error::Io(_) => 1,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
