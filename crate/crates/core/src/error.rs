use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("degenerate operator: {0}")]
    Degenerate(String),

    #[error("operator is not anti-Hermitian (||G + G^dagger||_F = {0:e})")]
    NotAntiHermitian(f64),

    #[error("operator leaks out of its block: {0}")]
    Leakage(String),

    #[error("eigensolver failed: {what} (residual {residual:e})")]
    Eigen { what: String, residual: f64 },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("arity mismatch: scheme expects {expected} terms, got {got}")]
    Arity { expected: usize, got: usize },

    #[error("operator groups do not commute internally: {0}")]
    NonCommuting(String),

    #[error("FCIDUMP line {line}: {msg}")]
    Fcidump { line: usize, msg: String },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
