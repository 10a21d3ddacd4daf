use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// Mismatched or inconsistent inputs (e.g. node-count mismatch between a
    /// flooding state and a snapshot).
    #[error("configuration error: {0}")]
    Config(String),

    /// An argument outside its documented domain.
    #[error("parameter error: {0}")]
    Parameter(String),

    /// A queueing formula was asked to evaluate an unstable operating point.
    #[error("instability: {0}")]
    Instability(String),

    /// Calibration could not reach its target.
    #[error("calibration error: {0}")]
    Calibration(String),

    /// Degenerate regression input.
    #[error("fit error: {0}")]
    Fit(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code convention: 1 for bad parameters, 2 for runtime
    /// failures.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Config(_) | Error::Parameter(_) => 1,
            _ => 2,
        }
    }
}
