use crate::equilibrium::Trajectory;

/// Crate-wide error type.
///
/// Variants group into three families that callers (notably the CLI) map to
/// distinct exit statuses: input/validation problems, solver failures, and I/O.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("singular design: {0}")]
    SingularDesign(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// A target value cannot be reached anywhere in the feasible domain.
    #[error("no solution: {0}")]
    NoSolution(String),

    /// No interior equilibrium exists (corner outcome).
    #[error("no interior equilibrium: {0}")]
    NoEquilibrium(String),

    /// A fixed-point iteration left the admissible region. Carries the partial
    /// path walked before detection.
    #[error("divergent iteration: {message}")]
    Diverged {
        message: String,
        trajectory: Box<Trajectory>,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
