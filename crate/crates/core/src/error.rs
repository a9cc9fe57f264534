//! Crate-wide error type.

use thiserror::Error;

/// Errors reported by state constructors, protocol evaluation and the
/// Monte Carlo runner.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("state needs at least one mode")]
    ZeroModes,

    #[error("mode index {index} out of range for {n_modes} modes")]
    ModeOutOfRange { index: usize, n_modes: usize },

    #[error("operation requires two distinct modes (got {0} twice)")]
    DuplicateMode(usize),

    #[error("squeezing parameter must be non-negative (got {0})")]
    NegativeSqueezing(f64),

    #[error("beamsplitter transmittance must lie strictly between 0 and 1 (got {0})")]
    TransmittanceOutOfRange(f64),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("coefficient must be finite (got {0})")]
    NonFiniteCoefficient(f64),

    #[error("variance must be non-negative (got {0})")]
    NegativeVariance(f64),

    #[error("signal-to-noise ratio must be non-negative (got {0})")]
    NegativeSnr(f64),

    #[error("mean photon number must be non-negative (got {0})")]
    NegativePhotonNumber(f64),

    #[error("squeezing fraction must lie in [0, 1] (got {0})")]
    SplitOutOfRange(f64),

    #[error("Monte Carlo run needs at least 2 samples (got {0})")]
    TooFewSamples(u64),

    #[error("protocol stations must be distinct: {0}")]
    StationConflict(String),

    #[error("message trace write failed: {0}")]
    TraceWrite(String),
}

pub type Result<T> = std::result::Result<T, Error>;
