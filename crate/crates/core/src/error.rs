use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("unsupported nilpotency step {0} (at most 4 is supported)")]
    UnsupportedStep(usize),
    #[error("shape mismatch: expected length {expected}, got {got}")]
    Shape { expected: usize, got: usize },
    #[error("invalid algebra: {0}")]
    InvalidAlgebra(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("point violates the right inner-set condition: {0}")]
    InnerSet(String),
    #[error("support violation: {0}")]
    Support(String),
    #[error("empty boundary for domain `{0}`")]
    EmptyBoundary(String),
    #[error("non-regular level set for domain `{domain}`: |grad| = {grad_norm:e} at {point:?}")]
    NonRegular { domain: String, grad_norm: f64, point: Vec<f64> },
    #[error("margin violation: {0}")]
    Margin(String),
    #[error("misaligned boundary patches: {0}")]
    Misaligned(String),
    #[error("expression error at position {pos}: {msg}")]
    Expression { pos: usize, msg: String },
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
    #[error("empty region: {0}")]
    EmptyRegion(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
