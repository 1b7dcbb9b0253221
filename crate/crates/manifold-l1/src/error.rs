use thiserror::Error;

/// Errors produced by mesh ingestion, assembly, and the solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("degenerate face {face}: area {area:.3e} is below tolerance {tol:.3e}")]
    DegenerateFace { face: usize, area: f64, tol: f64 },

    #[error("face {face} references vertex {index}, but the mesh has {count} vertices")]
    IndexOutOfRange {
        face: usize,
        index: usize,
        count: usize,
    },

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("problem size {n} exceeds the dense limit {limit}")]
    SizeLimitExceeded { n: usize, limit: usize },

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("linear solve failed: {0}")]
    SolveFailure(String),

    #[error("objective value is not finite")]
    NonFiniteObjective,

    #[error("low-rank core matrix is numerically singular")]
    CoreSingular,

    #[error("eigensolver did not converge within {iterations} iterations (last residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("no positive definite shift found after {attempts} attempts")]
    ShiftFailure { attempts: usize },

    #[error("orthogonality loss: max |phi_i^T A phi_j| = {max_offdiag:.3e}")]
    OrthogonalityLoss { max_offdiag: f64 },

    #[error("invalid options: {0}")]
    InvalidOptions(String),
}

pub type Result<T> = std::result::Result<T, Error>;
