use thiserror::Error;

/// Errors raised by the rounding toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix{} is not positive definite (smallest eigenvalue {min_eig:e})", index_suffix(.index))]
    NotPositiveDefinite { index: Option<usize>, min_eig: f64 },

    #[error("matrix is not positive semidefinite (smallest eigenvalue {min_eig:e})")]
    NotPositiveSemidefinite { min_eig: f64 },

    #[error("z = {z} lies outside the positive-definite window (safe radius {radius:e})")]
    Domain { z: f64, radius: f64 },

    #[error("element {element} out of range for ground set of size {size}")]
    OutOfRange { element: usize, size: usize },

    #[error("ground set of size {size} exceeds the enumeration limit {limit}")]
    TooLarge { size: usize, limit: usize },

    #[error("point is not in the base polytope: {0}")]
    NotInPolytope(String),

    #[error("no admissible value found: {0}")]
    Infeasible(String),

    #[error("numeric failure in {context} (best value so far {best:e})")]
    NumericFailure { context: String, best: f64 },

    #[error("pipage step failed: {0}")]
    StepFailure(String),

    #[error("{path}:{line}: {message}")]
    Parse { path: String, line: usize, message: String },
}

fn index_suffix(index: &Option<usize>) -> String {
    match index {
        Some(i) => format!(" #{i}"),
        None => String::new(),
    }
}

pub type Result<T> = std::result::Result<T, Error>;
