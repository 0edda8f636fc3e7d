use thiserror::Error;

use crate::model::Decomposition;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite entry at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("traffic matrix needs at least 2 intervals, got {rows}")]
    TooShort { rows: usize },

    #[error("traffic matrix has no flows")]
    Empty,

    #[error("bin index {k} out of range for length {len}")]
    OutOfRange { k: usize, len: usize },

    #[error("shape mismatch: expected {expected:?}, found {found:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("soft-threshold parameter must be nonnegative, got {0}")]
    NegativeEps(f64),

    #[error("ball radius must be positive, got {0}")]
    NonPositiveDelta(f64),

    #[error("singular value decomposition failed: {0}")]
    SvdFailure(String),

    /// The iteration cap was hit. The payload holds the last iterate.
    #[error("solver stopped after {} iterations without converging", .0.trace.iterations)]
    NotConverged(Box<Decomposition>),

    #[error("requested rank {rank} exceeds min(T, P) = {max}")]
    RankTooLarge { rank: usize, max: usize },

    #[error("reference matrix has zero norm")]
    ZeroReference,

    #[error("empty input")]
    EmptyInput,

    #[error("ground-truth mean is not positive")]
    ZeroTruth,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}
