use thiserror::Error;

pub type Result<T> = std::result::Result<T, CliError>;

/// Failure classes, each with its own process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad input: unknown preset, unreadable or invalid config, unwritable
    /// output path, mismatched grids.
    #[error("{0}")]
    Validation(String),

    /// At least one Monte Carlo trial diverged.
    #[error("{0}")]
    Divergence(String),

    /// `compare` found a gap above the tolerance.
    #[error("{0}")]
    Tolerance(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Divergence(_) => 2,
            CliError::Tolerance(_) => 3,
        }
    }
}

impl From<sparse_lms::Error> for CliError {
    fn from(e: sparse_lms::Error) -> Self {
        CliError::Validation(e.to_string())
    }
}
