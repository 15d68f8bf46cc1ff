use alloc::string::String;

use crate::network::SignConfig;

/// Errors raised by the core pipeline.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid dimensions: {0}")]
    InvalidDims(String),

    #[error("matrix is not hermitian (max |m - m^dagger| = {max_deviation:e})")]
    NotHermitian { max_deviation: f64 },

    #[error("matrix is not unitary (max |u u^dagger - I| = {max_deviation:e})")]
    NotUnitary { max_deviation: f64 },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("rank {rank} out of range for dimension {dim}")]
    RankOutOfRange { rank: usize, dim: usize },

    #[error("joint dimension {required} exceeds the size cap {cap}; use the analytic path")]
    SizeCap { required: usize, cap: usize },

    #[error("sign configuration {0} is not calibrated")]
    NotCalibrated(SignConfig),

    #[error("internal consistency failure: {0}")]
    Internal(String),

    #[error("missing measurement: group {group} at k = {k}")]
    MissingData { group: String, k: usize },

    #[error("ill-conditioned spectrum recovery (imaginary residue {residue:e})")]
    IllConditioned { residue: f64 },

    #[error("invalid spectrum: eigenvalues sum to {trace}, expected 1")]
    InvalidSpectrum { trace: f64 },

    #[error("cannot compare vectors with totals {left} and {right}")]
    InvalidComparison { left: f64, right: f64 },
}

pub type Result<T> = core::result::Result<T, Error>;
