use std::fmt;

/// Broad failure class, used by the binary to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Parse,
    Validation,
    Budget,
    Regime,
    Io,
}

impl ErrorClass {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorClass::Parse => 2,
            ErrorClass::Validation => 3,
            ErrorClass::Budget => 4,
            ErrorClass::Regime => 5,
            ErrorClass::Io => 6,
        }
    }
}

impl fmt::Display for ErrorClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ErrorClass::Parse => "parse",
            ErrorClass::Validation => "validation",
            ErrorClass::Budget => "budget",
            ErrorClass::Regime => "regime",
            ErrorClass::Io => "io",
        };
        f.write_str(s)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid `{field}`: {reason}")]
    Invalid { field: String, reason: String },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("enumeration budget exceeded: {0}")]
    Budget(String),

    #[error("regime error: {0}")]
    Regime(String),

    #[error("no advantage: resource success {p_resource} does not exceed reference {reference}")]
    NoAdvantage { p_resource: f64, reference: f64 },

    #[error("structural error: {0}")]
    Structural(String),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Invalid {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Parse(_) | Error::Json(_) => ErrorClass::Parse,
            Error::Invalid { .. }
            | Error::Dimension(_)
            | Error::NoAdvantage { .. }
            | Error::Structural(_) => ErrorClass::Validation,
            Error::Budget(_) => ErrorClass::Budget,
            Error::Regime(_) => ErrorClass::Regime,
            Error::Io(_) => ErrorClass::Io,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
