use thiserror::Error;

/// Errors raised by model construction, solvers and estimators.
///
/// Variants fall into a handful of families (see [`Error::kind`]) so that
/// front ends can map them onto distinct exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot parse `{input}` as a rational number: {reason}")]
    ParseRational { input: String, reason: String },

    #[error("malformed document: {0}")]
    Document(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("state `{state}`: action index {action} is not in its action set (size {available})")]
    IllegalAction {
        state: String,
        action: usize,
        available: usize,
    },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("{what}: {count} exceeds the configured budget of {limit}{hint}")]
    BudgetExceeded {
        what: &'static str,
        count: u128,
        limit: u128,
        hint: &'static str,
    },

    #[error("chain is not ergodic: {0}")]
    NotErgodic(String),

    #[error("asymptotic variance is zero (sigma^2 = {sigma2:e}); the normalized total reward is degenerate")]
    DegenerateVariance { sigma2: f64 },

    #[error("singular linear system in {context} (condition estimate {condition:e})")]
    Singular {
        context: &'static str,
        condition: f64,
    },

    #[error("no convergence: {0}")]
    NoConvergence(String),

    #[error("every candidate policy was rejected; nothing to build a front from")]
    EmptyFront,
}

/// Coarse classification used for exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Parse,
    Precondition,
    Budget,
    Ergodicity,
    Numerical,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::ParseRational { .. } | Error::Document(_) => ErrorKind::Parse,
            Error::InvalidModel(_) | Error::IllegalAction { .. } | Error::Precondition(_) => {
                ErrorKind::Precondition
            }
            Error::BudgetExceeded { .. } => ErrorKind::Budget,
            Error::NotErgodic(_) | Error::DegenerateVariance { .. } | Error::EmptyFront => {
                ErrorKind::Ergodicity
            }
            Error::Singular { .. } | Error::NoConvergence(_) => ErrorKind::Numerical,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
