use thiserror::Error;

/// Broad failure class, used by the CLI to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Regime,
    Numerical,
    Io,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("degenerate regression: {0}")]
    DegenerateFit(String),

    #[error("tail fit needs at least 4 usable points, found {found}")]
    InsufficientTail { found: usize },

    #[error("regime gate: {0}")]
    Regime(String),

    #[error("field is not normalized: h^d * sum(v^2) = {mass}")]
    Unnormalized { mass: f64 },

    #[error("vertex {0:?} lies outside the grid extent")]
    OutOfExtent(Vec<i64>),

    #[error("quadrature did not converge: relative error estimate {estimate:e}")]
    Quadrature { estimate: f64 },

    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn parse(line: usize, reason: impl Into<String>) -> Self {
        Error::Parse {
            line,
            reason: reason.into(),
        }
    }

    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Regime(_) | Error::InsufficientTail { .. } => ErrorKind::Regime,
            Error::Quadrature { .. } => ErrorKind::Numerical,
            Error::Io(_) => ErrorKind::Io,
            _ => ErrorKind::Config,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
