use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter or argument combination that can never produce a run.
    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    /// An engine invariant was violated. Always a bug in a policy or the engine.
    #[error("simulation error: {0}")]
    Simulation(String),

    #[error("brute-force oracle refuses {items} items over {slots} slots (limit 10 each)")]
    TooLarge { items: usize, slots: usize },

    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    /// True for errors caused by user input rather than internal failures.
    pub fn is_usage(&self) -> bool {
        matches!(self, Error::Config(_) | Error::InvalidInstance(_) | Error::Parse { .. } | Error::TooLarge { .. })
    }
}
