use thiserror::Error;

/// Errors raised by the library.
///
/// The CLI maps [`Error::InvariantViolation`] to exit code 2 and every other
/// variant to exit code 3.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("singular covering matrix")]
    SingularMatrix,
    #[error("trivial covering: |det B| = 1")]
    TrivialCovering,
    #[error("not a level-{level} frequency")]
    NotLevelFrequency { level: usize },
    #[error("not a self-covering: det B = {det} is not 1 mod {q}")]
    NotSelfCovering { det: String, q: u64 },
    #[error("insufficient spectrum: {steps} steps in the fit window, need {required}")]
    InsufficientSpectrum { steps: usize, required: usize },
    #[error("parse error at position {position}: {message}")]
    Parse { position: usize, message: String },
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("invariant violation: {0}")]
    InvariantViolation(String),
}

impl Error {
    pub(crate) fn parse(position: usize, message: impl Into<String>) -> Self {
        Error::Parse { position, message: message.into() }
    }

    pub(crate) fn precondition(message: impl Into<String>) -> Self {
        Error::Precondition(message.into())
    }

    pub(crate) fn invariant(message: impl Into<String>) -> Self {
        Error::InvariantViolation(message.into())
    }

    /// Short machine-readable tag for the error kind.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::SingularMatrix => "singular_matrix",
            Error::TrivialCovering => "trivial_covering",
            Error::NotLevelFrequency { .. } => "not_level_frequency",
            Error::NotSelfCovering { .. } => "not_self_covering",
            Error::InsufficientSpectrum { .. } => "insufficient_spectrum",
            Error::Parse { .. } => "parse",
            Error::Precondition(_) => "precondition",
            Error::InvariantViolation(_) => "invariant_violation",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
