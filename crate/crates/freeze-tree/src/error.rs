use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A quantity was requested past the walk's absorption time.
    #[error("walk absorbed at step {tau}, horizon {requested} is out of range")]
    WalkAbsorbed { tau: usize, requested: usize },

    /// An argument fell outside the documented domain.
    #[error("out of range: {0}")]
    OutOfRange(String),

    /// Exhaustive enumeration would visit more states than the cap allows.
    #[error("state space of size {size} exceeds enumeration cap {cap}")]
    EnumerationCap { size: u128, cap: u128 },

    /// Rejection sampling of a survival-conditioned sequence gave up.
    #[error("conditioning on survival failed after {attempts} attempts")]
    ConditioningFailed { attempts: u64 },

    /// The tree is not a valid double-labelled increasing tree.
    #[error("not an increasing double-labelled tree: {0}")]
    NotIncreasingTree(String),

    /// The tree is not a valid increasing binary plane tree.
    #[error("not an increasing binary plane tree: {0}")]
    NotIncreasingBinary(String),

    /// A chi-square cell had too small an expected count after pooling.
    #[error("chi-square expected counts below {min_expected} per cell; add replications")]
    SparseCells { min_expected: f64 },

    /// Manifest validation failed.
    #[error("invalid manifest: {0}")]
    InvalidManifest(String),

    /// A sequence file could not be parsed.
    #[error("bad sequence file: {0}")]
    BadSequenceFile(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
