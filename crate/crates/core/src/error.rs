use thiserror::Error;

/// Errors produced by the inference library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parameter out of domain: {0}")]
    ParameterDomain(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("point outside domain: {0}")]
    OutOfDomain(String),

    #[error("numerical conditioning failure: {0}")]
    Conditioning(String),

    #[error("infeasible constraints: {0}")]
    Infeasible(String),

    #[error("sampler diverged: {0}")]
    Divergence(String),

    #[error("intensity {value} exceeds dominating bound {bound} at {location:?}")]
    DominatingBound { value: f64, bound: f64, location: Vec<f64> },

    #[error("hyperparameter estimation failed: {0}")]
    EstimationFailure(String),

    #[error("invalid state: {0}")]
    State(String),

    #[error("degenerate reference: {0}")]
    DegenerateReference(String),
}

pub type Result<T> = std::result::Result<T, Error>;
