use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Cholesky pivot at `index` fell to `pivot` (≤ 1e-14).
    #[error("matrix is not positive definite (pivot {pivot:e} at index {index})")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    /// Linear system too ill-conditioned to solve; `rcond` is the reciprocal
    /// 1-norm condition estimate.
    #[error("singular or ill-conditioned system (reciprocal condition {rcond:e})")]
    SingularSystem { rcond: f64 },

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    /// An iterative routine stopped before meeting its tolerance.
    #[error("{context} did not converge after {iterations} iterations (residual {residual:e})")]
    NonConverged {
        context: String,
        iterations: usize,
        residual: f64,
    },

    #[error("residual norm {norm:e} is too small for inference")]
    DegenerateResidual { norm: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    /// Prefix the context of a `NonConverged` error, leave others untouched.
    pub(crate) fn in_context(self, prefix: &str) -> Self {
        match self {
            Error::NonConverged {
                context,
                iterations,
                residual,
            } => Error::NonConverged {
                context: format!("{prefix}: {context}"),
                iterations,
                residual,
            },
            other => other,
        }
    }
}
