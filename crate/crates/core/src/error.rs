use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unknown test function `{0}`")]
    UnknownFunction(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("point is {distance:e} from the singular set, need more than {required:e}")]
    NearSingular { distance: f64, required: f64 },

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("matrix is not Hermitian: asymmetry {asymmetry:e} exceeds {tolerance:e}")]
    NonHermitian { asymmetry: f64, tolerance: f64 },

    #[error("every sample fell inside the exclusion shell")]
    AllSamplesClipped,

    #[error("estimate unreliable: clipped fraction {clipped_fraction:.3} >= 0.5")]
    Unreliable { clipped_fraction: f64 },

    #[error("inconclusive: {0}")]
    Inconclusive(String),
}

pub type Result<T> = std::result::Result<T, Error>;
