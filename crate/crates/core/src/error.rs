use thiserror::Error;

use crate::qcore::PovmReport;

/// Errors raised across the library.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("dimension {dim} exceeds the configured cap {cap}")]
    DimensionTooLarge { dim: usize, cap: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("matrix is not Hermitian (defect {0:.3e})")]
    NotHermitian(f64),

    #[error("eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {residual:.3e})")]
    EigenNotConverged { sweeps: usize, residual: f64 },

    #[error("invalid POVM: {0}")]
    InvalidPovm(PovmReport),

    #[error("instrument is not normalized: completeness defect {0:.3e}")]
    NotNormalized(f64),

    #[error("outcome {outcome} has probability {probability:.3e}; no post-measurement state")]
    ZeroProbabilityOutcome { outcome: usize, probability: f64 },

    #[error("invalid bounds: {0}")]
    InvalidBounds(String),

    #[error("quadratic program is infeasible: {0}")]
    Infeasible(String),

    #[error("target expectation values are unachievable: {0}")]
    Unachievable(String),

    #[error("search space of {strings} outcome strings is too large for exhaustive enumeration (limit {limit})")]
    SearchSpaceTooLarge { strings: usize, limit: usize },

    #[error("at least {min} samples are required, got {got}")]
    TooFewSamples { got: usize, min: usize },

    #[error("measurement is trivial: every POVM element is proportional to the identity")]
    TrivialMeasurement,

    #[error("every hypothesis is eliminated by the observed outcomes")]
    Undecodable,

    #[error("iteration did not converge: gap {gap:.3e} after {iterations} iterations")]
    NotConverged { iterations: usize, gap: f64, best: f64 },

    #[error("problem too large: {0}")]
    TooLarge(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
