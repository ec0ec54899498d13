use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is not antisymmetric (max |U + U^T| = {0:.3e})")]
    NotAntisymmetric(f64),

    #[error("unknown built-in group '{0}'")]
    UnknownBuiltin(String),

    #[error("invalid parameter: {0}")]
    Invalid(String),

    #[error("eigensolver failed: {0}")]
    Eigen(String),

    #[error("tolerance {tol:.3e} unreachable: {what}")]
    Unreachable { what: String, tol: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("config parse error: {0}")]
    Config(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
