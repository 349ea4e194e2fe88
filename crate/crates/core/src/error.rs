use std::io;

/// Errors produced anywhere in the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("singular linear system: {0}")]
    Singular(String),
    #[error("iterate became non-finite at outer iteration {iteration}")]
    Divergence { iteration: usize },
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("power iteration did not converge (residual {residual:e})")]
    NoConvergence { residual: f64 },
    #[error("solver stopped after {outer} outer iterations with gradient norm {grad_norm:e}")]
    NotConverged { outer: u64, grad_norm: f64 },
    #[error("config error in `{field}`: {msg}")]
    Config { field: String, msg: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            msg: msg.into(),
        }
    }

    /// Process exit code for the command-line front-end: 1 for input and
    /// configuration problems, 2 for numeric failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } | Error::Io(_) | Error::Parse { .. } => 1,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
