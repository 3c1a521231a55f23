//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("empty honest set")]
    EmptyHonestSet,

    #[error("message set malformed: {0}")]
    MalformedMessages(String),

    #[error("rule domain violation: {0}")]
    RuleDomain(String),

    #[error("invalid config: field `{field}`: {reason}")]
    InvalidConfig { field: String, reason: String },

    #[error("no stochastic model for loss kind `{0}`: stochastic regret undefined")]
    NoStochasticModel(&'static str),

    #[error("hindsight system is singular even after ridge fallback")]
    SingularSystem,

    #[error("attack inapplicable: {0}")]
    AttackInapplicable(String),

    #[error("empty history: at least one step required")]
    EmptyHistory,

    #[error("step {step}: {source}")]
    TrialStep {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("malformed CSV `{path}`: {reason}")]
    MalformedCsv { path: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn at_step(self, step: usize) -> Error {
        Error::TrialStep {
            step,
            source: Box::new(self),
        }
    }

    /// True for errors that stem from a bad experiment description rather
    /// than a runtime failure. The CLI maps these to exit code 2.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidConfig { .. } | Error::RuleDomain(_) | Error::AttackInapplicable(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
