use thiserror::Error;

/// Errors raised by the geometry, density and flow routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("scale {scale} is below the sampling floor {floor}")]
    BelowSamplingFloor { scale: f64, floor: f64 },

    #[error("hypothesis not verified: {0}")]
    HypothesisUnverified(String),

    #[error("projection is not injective: points {0} and {1} project within resolution")]
    NotInjective(usize, usize),

    #[error("missing snapshot near time {0}")]
    MissingSnapshot(f64),

    #[error("numerical run unresolved: {0}")]
    Unresolved(String),

    #[error("profile curve self-intersects at time {0}")]
    SelfIntersection(f64),

    #[error("lemma violated: {0}")]
    LemmaViolated(String),

    #[error("no feasible constants: {0}")]
    Infeasible(String),

    #[error("io: {0}")]
    Io(String),

    #[error("format: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Format(e.to_string())
    }
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
