use thiserror::Error;

/// Errors raised across the library.
///
/// The variants map onto CLI exit codes: configuration and usage problems
/// exit with 2, numeric and solver failures with 3, resource limits with 4.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("solver failed: {message}")]
    Solver {
        message: String,
        /// Best stationary point seen before giving up, if any.
        best_q: Option<Vec<f64>>,
    },

    #[error("no convergence after {iterations} iterations (residual {residual:.3e})")]
    Convergence { iterations: usize, residual: f64 },

    #[error("divergence: {0}")]
    Divergence(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("resource error: {0}")]
    Resource(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Usage(_) | Error::Domain(_) => 2,
            Error::Numeric(_)
            | Error::Solver { .. }
            | Error::Convergence { .. }
            | Error::Divergence(_)
            | Error::Degenerate(_)
            | Error::Invariant(_) => 3,
            Error::Resource(_) | Error::Io(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
