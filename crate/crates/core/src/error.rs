use thiserror::Error;

/// Errors raised by space construction, filling, modulus and pipeline stages.
#[derive(Debug, Error)]
pub enum Error {
    #[error("size cap exceeded: {0}")]
    Size(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("not a metric: {0}")]
    Metric(String),
    #[error("unsupported exponent p = {0}; the modulus solver requires p >= 1")]
    UnsupportedExponent(f64),
    #[error("path enumeration exceeded the cap of {cap} simple paths")]
    PathExplosion { cap: usize },
    #[error("insufficient depth: {0}")]
    Depth(String),
    #[error("constants: {0}")]
    Constants(String),
    #[error("construction check failed: {0}")]
    Construction(String),
    #[error("sampling: {0}")]
    Sampling(String),
    #[error("domain: {0}")]
    Domain(String),
    #[error("format: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
