use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("exponent p = {p} outside the admissible open range (1, {upper}) for d = {dim}")]
    ExponentOutOfRange { dim: usize, p: f64, upper: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("no convergence after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("Gram matrix is numerically singular (smallest eigenvalue {0:.3e})")]
    SingularGram(f64),

    #[error("missing ledger entry for mass {0}")]
    MissingEntry(u32),

    #[error("inconsistent ledger: {0}")]
    InconsistentLedger(String),

    #[error("no sign change of the critical-exponent function on ({lo}, {hi})")]
    NoSignChange { lo: f64, hi: f64 },

    #[error("config error at line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
