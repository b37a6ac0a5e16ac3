use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Argument outside the operation's domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// A required precondition (usually a condition check) did not hold.
    #[error("precondition failed: {}", ids.join(", "))]
    Precondition { ids: Vec<String> },

    /// The operation does not apply to this configuration.
    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
