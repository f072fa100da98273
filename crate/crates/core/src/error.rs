use thiserror::Error;

/// Errors produced by the analysis toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("non-finite value in channel {channel} at sample {sample}")]
    NonFinite { channel: usize, sample: usize },
    #[error("duplicate channel label {0:?}")]
    DuplicateLabel(String),
    #[error("channel length mismatch: expected {expected}, channel {channel} has {found}")]
    LengthMismatch {
        channel: usize,
        expected: usize,
        found: usize,
    },
    #[error("panel must contain at least one channel and one sample")]
    EmptyPanel,
    #[error("channel {0:?} is constant (variance below 1e-15)")]
    ConstantChannel(String),
    #[error("process index {index} out of range for {channels} channels")]
    InvalidProcess { index: usize, channels: usize },
    #[error("invalid probability mass function: {0}")]
    InvalidPmf(String),
    #[error("system is not stable: {0}")]
    Unstable(String),
    #[error("case region undefined for sigma_phi^2 = {0} (requires >= 4)")]
    RegionUndefined(f64),
    #[error("covariance matrix is singular or not positive definite")]
    SingularCovariance,
    #[error("series too short: {available} samples, need at least {required}")]
    TooShort { available: usize, required: usize },
    #[error("argument outside the function domain: {0}")]
    Domain(String),
    #[error(
        "degenerate geometry: {zero_radius} of {points} points have zero k-th neighbor distance"
    )]
    DegenerateGeometry { zero_radius: usize, points: usize },
    #[error("source and target are the same process ({0})")]
    SameProcess(usize),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("estimation failed for pair {source_id} -> {target}: {error}")]
    Pair {
        source_id: usize,
        target: usize,
        error: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
