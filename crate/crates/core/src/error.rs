use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("Jacobi matrix too small: {need} recurrence coefficients required, {have} available")]
    InsufficientOrder { need: usize, have: usize },

    #[error("tridiagonal eigensolver did not converge within {sweeps} sweeps")]
    NoConvergence { sweeps: usize },

    #[error("Lanczos broke down after {steps} steps, before order {requested}")]
    Breakdown { steps: usize, requested: usize },

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("cannot parse {what} `{input}`: {msg}")]
    Spec {
        what: &'static str,
        input: String,
        msg: String,
    },

    #[error("function `{name}` is undefined at node {x}")]
    Domain { name: String, x: f64 },

    #[error("mass mismatch: {0} vs {1}")]
    MassMismatch(f64, f64),

    #[error("root bracketing failed: {0}")]
    Bracket(String),

    #[error("{what} exceeds cap ({size} > {cap})")]
    TooLarge {
        what: String,
        size: usize,
        cap: usize,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
