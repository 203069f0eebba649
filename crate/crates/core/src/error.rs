use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("silent RF chain: Bussgang weight undefined (chain {chain})")]
    SilentRfChain { chain: usize },

    #[error("quantization distortion exceeds power budget (tr(C_qq) = {distortion_trace}, P_max = {p_max})")]
    PowerBudgetExceeded { distortion_trace: f64, p_max: f64 },

    #[error("ill-conditioned rate evaluation (noise covariance condition number {condition_number:e})")]
    IllConditioned { condition_number: f64 },

    #[error("decomposition failed: {0}")]
    Decomposition(String),

    #[error("no schemes selected")]
    NoSchemes,
}

pub type Result<T> = std::result::Result<T, Error>;
