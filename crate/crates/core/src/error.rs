use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Arguments outside an operation's domain (bad quantum numbers, R <= 0, ...).
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// Numerical integration did not meet its contract.
    #[error("integration failure: {0}")]
    Integration(String),

    /// The search found no acceptable point; every evaluation is attached.
    #[error("optimization failure: {msg}")]
    Search { msg: String, history: Vec<(f64, f64)> },

    #[error("register too large: {dim} amplitudes exceeds the limit of {limit}")]
    SizeGuard { dim: usize, limit: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
