use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("hbar = theta = 0: every derived scalar is degenerate")]
    FullyDegenerate,

    #[error("hbar = 0 is not admitted here; use the analytic hbar -> 0 branch")]
    HbarZero,

    #[error("theta = 0 is not admitted here")]
    ThetaZero,

    #[error("the two expressions for beta disagree: {route_a} vs {route_b}")]
    BetaMismatch { route_a: f64, route_b: f64 },

    #[error("operation `{op}` needs a Gaussian-plus-constant function, got a callable")]
    CallableNotSupported { op: &'static str },

    #[error("quadrature did not converge: value {value}, error estimate {estimate} (tolerance {tolerance})")]
    NotConverged {
        value: f64,
        estimate: f64,
        tolerance: f64,
    },

    #[error("truncation n_max = {n_max} insufficient: discarded ground-state mass {tail:e} exceeds {limit:e}")]
    TruncationInsufficient { n_max: usize, tail: f64, limit: f64 },

    #[error("invalid quadrature spec: {0}")]
    InvalidQuadrature(String),

    #[error("invalid function description: {0}")]
    InvalidFunction(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
