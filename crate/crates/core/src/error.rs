use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Clone, Error)]
pub enum ChoquardError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("functions live on different grids (hash {left:#x} vs {right:#x})")]
    GridMismatch { left: u64, right: u64 },

    #[error("non-finite sample at node {index} (r = {radius})")]
    NonFiniteSample { index: usize, radius: f64 },

    #[error("nonlinearity range error: t = {t} exceeds domain_max = {domain_max}")]
    Range { t: f64, domain_max: f64 },

    #[error("invalid nonlinearity parameter: {0}")]
    InvalidNonlinearity(String),

    #[error("quadrature failed to converge: {context} (estimate {estimate}, error {error})")]
    Quadrature {
        context: String,
        estimate: f64,
        error: f64,
    },

    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    #[error("operator table of size {n}x{n} exceeds the configured limit {max}")]
    OperatorTooLarge { n: usize, max: usize },

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("configuration error in `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for ChoquardError {
    fn from(e: std::io::Error) -> Self {
        ChoquardError::Io(e.to_string())
    }
}
