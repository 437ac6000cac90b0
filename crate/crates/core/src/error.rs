use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("matrix is not Hermitian (max |A - A^H| = {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("non-finite entry at index {index}")]
    NonFinite { index: usize },

    #[error("state vector is not normalized (norm = {norm})")]
    NotNormalized { norm: f64 },

    #[error("eigendecomposition did not converge after {iterations} iterations")]
    NonConvergence { iterations: usize },

    #[error("degenerate spectrum: eigenvalue gap {gap:e} below tolerance {tolerance:e}")]
    DegenerateSpectrum { gap: f64, tolerance: f64 },

    #[error("Vandermonde solve is ill-conditioned (residual {residual:e})")]
    IllConditioned { residual: f64 },

    #[error("generators {first} and {second} do not commute (max |[A,B]| = {deviation:e})")]
    NonCommutingFamily {
        first: usize,
        second: usize,
        deviation: f64,
    },

    #[error("generator {index} is not diagonal")]
    NotDiagonal { index: usize },

    #[error("bit budget of {budget} exceeded by monomial {monomial}")]
    BudgetExceeded { budget: u64, monomial: String },

    #[error("enumeration of {requested} points exceeds cap {cap}")]
    EnumerationCapExceeded { requested: f64, cap: u64 },

    #[error("imaginary part {imag:e} of an expectation value exceeds tolerance")]
    NumericIntegrity { imag: f64 },

    #[error("target degree {degree} exceeds the reachable degree {max_degree}")]
    DegreeOverflow { degree: u64, max_degree: u64 },

    #[error("solver exhausted {starts} starts without a solution or a stationary point (best residual {best_residual:e}, gradient norm {gradient_norm:e})")]
    BudgetExhausted {
        starts: usize,
        best_residual: f64,
        gradient_norm: f64,
    },

    #[error("word enumeration exceeded the product cap {cap}")]
    CapExceeded { cap: u64 },

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInstance(msg.into())
    }
}
