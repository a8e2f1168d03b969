use thiserror::Error;

/// Crate-wide error type.
///
/// Variants are split between *validation* errors (bad input from the user:
/// malformed data files, out-of-range parameters, inconsistent configs) and
/// *runtime* errors (I/O and numerical failures during a run). The CLI maps
/// the former to exit code 2 and the latter to exit code 1.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid parameter {name}: {msg}")]
    InvalidParam { name: &'static str, msg: String },

    #[error("missing required parameter `{0}`")]
    MissingParam(&'static str),

    #[error("unknown method identifier `{0}`")]
    UnknownMethod(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("plot error: {0}")]
    Plot(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors that indicate invalid user input rather than a
    /// failure at run time.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. }
                | Error::InvalidParam { .. }
                | Error::MissingParam(_)
                | Error::UnknownMethod(_)
                | Error::Config(_)
                | Error::DimensionMismatch { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
