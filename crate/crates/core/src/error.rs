use thiserror::Error;

pub type Result<T> = std::result::Result<T, ChainError>;

#[derive(Debug, Error)]
pub enum ChainError {
    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("Hilbert space dimension {n_states}^{length} exceeds the budget of {budget}")]
    DimensionBudget {
        n_states: usize,
        length: usize,
        budget: usize,
    },

    #[error("{what} = {value} is outside [{lo}, {hi}]")]
    OutOfRange {
        what: &'static str,
        value: i64,
        lo: i64,
        hi: i64,
    },

    #[error("momentum sector k={momentum}: leakage {leakage:e} exceeds {tolerance:e} (symmetry violation)")]
    SymmetryLeak {
        momentum: usize,
        leakage: f64,
        tolerance: f64,
    },

    #[error("eigenvector residual check failed: {0}")]
    Residual(String),

    #[error("eigensolver did not converge on a {dim}x{dim} matrix (fingerprint {fingerprint:016x}, frobenius norm {frobenius:e})")]
    NonConvergence {
        dim: usize,
        fingerprint: u64,
        frobenius: f64,
    },

    #[error("eigenvalue {value} of a restricted unitary lies {distance:e} from the nearest {order}-th root of unity")]
    RootSnap {
        value: String,
        distance: f64,
        order: usize,
    },

    #[error("state is not normalized: norm = {norm}")]
    Unnormalized { norm: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}
