use thiserror::Error;

/// Crate-wide error type. Variants map to the CLI exit codes: `Config` and
/// `Validation` are usage errors (exit 1), everything else is a runtime
/// failure (exit 2).
#[derive(Debug, Error)]
pub enum Error {
    /// A configuration file or config value failed validation.
    #[error("config error: {0}")]
    Config(String),

    /// An argument violated a documented precondition.
    #[error("validation error: {0}")]
    Validation(String),

    /// An API was called in a state its contract forbids.
    #[error("contract violation: {0}")]
    Contract(String),

    /// A randomized construction failed after its retry budget.
    #[error("generation failure: {0}")]
    Generation(String),

    /// Numerical breakdown (singular system, non-finite score, ...).
    #[error("numerical error: {0}")]
    Numerical(String),

    /// A solver finished without an optimal certificate.
    #[error("solver error: {0}")]
    Solver(String),

    /// Requested operation is out of the supported range.
    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// CLI exit code for this error: 1 for usage problems, 2 for runtime
    /// failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Validation(_) => 1,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
