use thiserror::Error;

/// Crate-wide error type.
///
/// Variants are grouped by the exit-code classes the CLI maps them to:
/// configuration/usage problems, data validation problems, and numeric
/// failures inside the sampler.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("data validation error: {0}")]
    Validation(String),

    #[error("ingestion error in {file} (row {row}): {message}")]
    Ingestion {
        file: String,
        row: u64,
        message: String,
    },

    #[error("matrix not positive definite (dim {dim}, diag range [{min_diag:.3e}, {max_diag:.3e}])")]
    NotPositiveDefinite {
        dim: usize,
        min_diag: f64,
        max_diag: f64,
    },

    #[error("numeric failure in {block} at sweep {sweep}: {source}")]
    Numeric {
        block: &'static str,
        sweep: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    /// Wrap a sampler error with the sweep index and the Gibbs block that failed.
    pub fn in_block(self, block: &'static str, sweep: usize) -> Self {
        Error::Numeric {
            block,
            sweep,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
