use thiserror::Error;

/// Errors produced by model construction, the solvers, and configuration I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("horizon under-resolved: Delta = {delta} is below 3 grid spacings ({min})")]
    HorizonUnderResolved { delta: f64, min: f64 },

    #[error("singular system: {0}")]
    Singular(String),

    #[error("channel collapse: H = {height} at X = {position} (node {node})")]
    ChannelCollapse {
        node: usize,
        position: f64,
        height: f64,
    },

    #[error("fixed-point iteration did not converge after {iterations} iterations (residuals: {history:?})")]
    NoConvergence {
        iterations: usize,
        history: Vec<f64>,
    },

    #[error("degenerate dispersion relation: {0}")]
    Degenerate(String),

    #[error("root not found: {0}")]
    RootNotFound(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
