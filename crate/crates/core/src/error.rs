use thiserror::Error;

use crate::model::{StationaryPolicy, Violation};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("model mismatch: {0}")]
    ModelMismatch(String),

    #[error("invalid policy: {0}")]
    PolicyInvalid(String),

    #[error("policy is not admissible (spectral radius {spectral_radius})")]
    InadmissiblePolicy {
        spectral_radius: f64,
        policy: Box<StationaryPolicy>,
    },

    #[error("no convergence after {iterations} iterations (best estimate {best_estimate})")]
    NoConvergence { iterations: usize, best_estimate: f64 },

    #[error("linear system is singular to working precision")]
    Singular,

    #[error("policy iteration revisited a policy without converging")]
    CycleDetected,

    #[error("{count} deterministic policies exceed the enumeration cap of {cap}")]
    PolicyListTooLarge { count: u128, cap: usize },

    #[error("model has {} validation violation(s)", .0.len())]
    InvalidModel(Vec<Violation>),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("malformed document: {0}")]
    Parse(#[from] serde_json::Error),
}

impl Error {
    /// Machine-readable code, stable across releases.
    pub fn code(&self) -> &'static str {
        match self {
            Error::ModelMismatch(_) => "MODEL_MISMATCH",
            Error::PolicyInvalid(_) => "POLICY_INVALID",
            Error::InadmissiblePolicy { .. } => "INADMISSIBLE_POLICY",
            Error::NoConvergence { .. } => "NO_CONVERGENCE",
            Error::Singular => "SINGULAR",
            Error::CycleDetected => "CYCLE_DETECTED",
            Error::PolicyListTooLarge { .. } => "POLICY_LIST_TOO_LARGE",
            Error::InvalidModel(_) => "INVALID_MODEL",
            Error::InvalidArgument(_) => "INVALID_ARGUMENT",
            Error::Parse(_) => "PARSE",
        }
    }
}
