use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum SqfaError {
    /// A caller-supplied parameter is out of range or inconsistent.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A machine violates a structural invariant (non-unitary gate,
    /// incomplete measurement, partial transition function, ...).
    /// `location` names the offending component.
    #[error("ill-formed machine at {location}: {reason}")]
    IllFormed { location: String, reason: String },

    /// A machine document could not be decoded into a machine.
    #[error("cannot load machine spec ({location}): {reason}")]
    Load { location: String, reason: String },

    /// The requested analysis is not defined for this machine/input.
    #[error("unsupported analysis: {0}")]
    Unsupported(String),

    /// The halting loop has zero per-iteration halting probability.
    #[error("nonterminating machine: {0}")]
    Nontermination(String),

    /// A randomized construction failed to certify within its budget.
    #[error("construction failed: {0}")]
    ConstructionFailed(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("malformed machine document: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, SqfaError>;

impl SqfaError {
    pub fn ill_formed(location: impl Into<String>, reason: impl Into<String>) -> Self {
        SqfaError::IllFormed { location: location.into(), reason: reason.into() }
    }

    pub fn load(location: impl Into<String>, reason: impl Into<String>) -> Self {
        SqfaError::Load { location: location.into(), reason: reason.into() }
    }
}
