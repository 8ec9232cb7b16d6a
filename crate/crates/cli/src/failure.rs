use std::fmt;
use std::process::ExitCode;

use mcfsing::Error;

/// Why a command stopped, and the exit code it maps to.
#[derive(Debug)]
pub enum Failure {
    /// Bad flags, config or input files (exit 2).
    Invalid(String),
    /// A numerical run or analysis did not resolve (exit 3).
    Unresolved(String),
    /// A verdict disagreed with its oracle (exit 4).
    Verdict(String),
}

impl Failure {
    pub fn code(&self) -> ExitCode {
        ExitCode::from(match self {
            Failure::Invalid(_) => 2,
            Failure::Unresolved(_) => 3,
            Failure::Verdict(_) => 4,
        })
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Invalid(m) => write!(f, "invalid input: {m}"),
            Failure::Unresolved(m) => write!(f, "unresolved: {m}"),
            Failure::Verdict(m) => write!(f, "verdict failed: {m}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let m = e.to_string();
        match e {
            Error::DimensionMismatch { .. }
            | Error::InvalidParameter { .. }
            | Error::Empty(_)
            | Error::Infeasible(_)
            | Error::Io(_)
            | Error::Format(_) => Failure::Invalid(m),
            Error::LemmaViolated(_) => Failure::Verdict(m),
            Error::DegenerateFit(_)
            | Error::BelowSamplingFloor { .. }
            | Error::HypothesisUnverified(_)
            | Error::NotInjective(..)
            | Error::MissingSnapshot(_)
            | Error::Unresolved(_)
            | Error::SelfIntersection(_) => Failure::Unresolved(m),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Invalid(e.to_string())
    }
}

pub type Outcome<T> = std::result::Result<T, Failure>;
