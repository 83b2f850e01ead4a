//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix of {rows} x {cols} entries exceeds the element budget {budget}")]
    DimensionOverflow {
        rows: usize,
        cols: usize,
        budget: usize,
    },

    #[error("invalid sparsity: need 1 <= l < m, got l = {l}, m = {m}")]
    InvalidSparsity { l: usize, m: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("sparsity regime violated: beta = {m}/{l} must exceed 2")]
    Regime { m: usize, l: usize },

    #[error("column index {index} out of range for {cols} columns")]
    IndexOutOfRange { index: usize, cols: usize },

    #[error("rank-deficient submatrix: column {column} dependent at tolerance {tol}")]
    RankDeficient { column: usize, tol: f64 },

    #[error("subset budget exceeded: C({m}, {l}) = {count} > {budget}")]
    BudgetExceeded {
        m: usize,
        l: usize,
        count: u128,
        budget: u64,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("singular constant: 2*sqrt(2*alpha) >= 1 at alpha = {alpha}")]
    Singularity { alpha: f64 },

    #[error("zeta must lie in (2/3, 1), got {zeta}")]
    ZetaRange { zeta: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by invalid user input rather than a runtime
    /// fault; the CLI maps these to exit code 2.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Io(_) | Error::Json(_))
    }
}
