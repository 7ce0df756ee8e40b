use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid composition: {0}")]
    InvalidComposition(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("row {row}: expected {expected} values, got {got}")]
    RowMismatch { row: usize, expected: usize, got: usize },

    #[error("{what} did not converge (worst residual {residual:e})")]
    NonConvergence { what: &'static str, residual: f64 },

    #[error("levels are not strictly decreasing: {0}")]
    LevelOrder(String),

    #[error("rank {rank} out of range for codebook of size {size}")]
    RankOutOfRange { rank: String, size: String },

    #[error("vector is not a codeword: {0}")]
    NotInCodebook(String),

    #[error("enumeration bound {bound} exceeds resource limit {limit}")]
    ResourceGuard { bound: String, limit: String },

    #[error("rate too low for high-resolution model: {0}")]
    RateTooLow(String),

    #[error("swap constraint set is infeasible: {0}")]
    OmegaInfeasible(String),

    #[error("design infeasible: {0}")]
    Infeasible(String),

    #[error("corrupt stream: {0}")]
    CorruptStream(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
