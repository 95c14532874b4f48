use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is singular (largest singular value {largest_singular_value:e})")]
    SingularMatrix { largest_singular_value: f64 },

    #[error("fiber length must be non-negative, got {0} km")]
    NegativeLength(f64),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("input power is zero")]
    ZeroInputPower,

    #[error("phase sweep needs at least {min} samples, got {got}")]
    TooFewSamples { got: usize, min: usize },

    #[error("visibility {0} is outside [0, 1]")]
    VisibilityOutOfRange(f64),

    #[error("config parse error at line {line}: {message}")]
    ConfigParse { line: usize, message: String },

    #[error("invalid config key `{key}`: {reason}")]
    ConfigValidation { key: String, reason: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }

    pub(crate) fn validation(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::ConfigValidation { key: key.into(), reason: reason.into() }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
