use thiserror::Error;

/// Errors produced by the solver library.
#[derive(Debug, Error)]
pub enum CspError {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    /// The instance admits no packing at all: some item does not fit in a
    /// single bin even on its own.
    #[error("infeasible instance: item {item} does not fit in one bin ({detail})")]
    InfeasibleInstance { item: usize, detail: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("LP solver failure: {0}")]
    SolverFailure(String),

    /// Pattern enumeration refused: the estimated pattern count is over budget.
    #[error("enumeration budget exceeded: estimated {estimate:.3e} patterns (limit {limit})")]
    BudgetExceeded { estimate: f64, limit: u64 },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, CspError>;
