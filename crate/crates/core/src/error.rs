use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("displacement too large: λ·max|ω| + r_q = {reach} must stay below 1")]
    DisplacementTooLarge { reach: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("unknown potential family `{0}`")]
    UnknownFamily(String),
    #[error("eigensolver did not converge after {iterations} iterations (max residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("symmetric factorization broke down at pivot {index} (|d| = {pivot:e})")]
    FactorizationBreakdown { index: usize, pivot: f64 },
    #[error("ground state is not sign-definite (min/max ratio {ratio:e})")]
    NotSignDefinite { ratio: f64 },
    #[error("bottom fiber eigenvalue degenerate at θ index {index} (gap {gap:e})")]
    DegenerateFiber { index: usize, gap: f64 },
    #[error("unsupported variant: {0}")]
    UnsupportedVariant(&'static str),
    #[error("negative band-comparison ratio {ratio:e} at θ index {index}")]
    NegativeRatio { index: usize, ratio: f64 },
    #[error("insufficient data: {0}")]
    InsufficientData(String),
}
