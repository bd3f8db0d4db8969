use std::path::PathBuf;

use crate::integrator::SolverState;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("non-finite value in {context} at index {index}")]
    NonFinite { context: &'static str, index: usize },

    #[error("conjugate symmetry violated by {violation:.3e} at index {index}")]
    SymmetryViolation { index: usize, violation: f64 },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("psi({value}) undefined for non-integer exponent without signed-power mode")]
    PsiDomain { value: f64 },

    #[error("overflow while evaluating {context}: max |u| = {max_abs:.3e}")]
    Overflow { context: &'static str, max_abs: f64 },

    #[error("blow-up at t = {t}: {reason}")]
    BlowUp {
        t: f64,
        reason: String,
        snapshot: Box<SolverState>,
    },

    #[error("invariant violated at t = {t}: {what}")]
    InvariantViolation { t: f64, what: String },

    #[error("oracle size {requested} exceeds limit {limit}")]
    CostGuard { requested: usize, limit: usize },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("validation error at `{path}`: {message}")]
    Validation { path: String, message: String },

    #[error("bad snapshot {path:?}: {message}")]
    Snapshot { path: PathBuf, message: String },

    #[error("io error on {path:?}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn param(name: &str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.to_string(),
            reason: reason.into(),
        }
    }

    pub(crate) fn validation(path: &str, message: impl Into<String>) -> Self {
        Error::Validation {
            path: path.to_string(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
