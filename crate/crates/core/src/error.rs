use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("singular denominator: {0} vanishes")]
    Singularity(&'static str),

    #[error("switching efficiency undefined: {0}")]
    UndefinedEfficiency(String),

    #[error("no transmission peak within the search window around {center}")]
    NoPeak { center: f64 },

    #[error("bandwidth undefined: {0}")]
    BandwidthUndefined(String),

    #[error("integration failed at t = {t}: {reason}")]
    IntegrationFailure { t: f64, reason: String },

    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },

    #[error("unknown configuration key `{0}`")]
    UnknownKey(String),

    #[error("constraint violated for `{field}`: {msg}")]
    Constraint { field: String, msg: String },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn constraint(field: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Constraint {
            field: field.into(),
            msg: msg.into(),
        }
    }

    /// True for errors that originate in the configuration rather than in
    /// the numerics.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Syntax { .. } | Error::UnknownKey(_) | Error::Constraint { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
