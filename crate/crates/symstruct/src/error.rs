use thiserror::Error;

/// Errors raised by the library. Physics-constraint violations and numerical
/// failures are kept distinct so callers (notably the CLI) can map them to
/// different exit codes.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SymError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not square ({rows}x{cols})")]
    NonSquare { rows: usize, cols: usize },

    #[error("matrix is not Hermitian (residual {residual:.3e})")]
    NotHermitian { residual: f64 },

    #[error("invalid density operator: {0}")]
    InvalidState(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate spectrum: {0}")]
    Degenerate(String),

    #[error("symmetry violated: block-structure residual {residual:.3e} exceeds {tol:.1e}")]
    SymmetryViolation { residual: f64, tol: f64 },

    #[error("postulate violated ({which}): residual {residual:.3e}")]
    PostulateViolation { which: String, residual: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl SymError {
    /// True for errors that signal a violated physical constraint rather
    /// than bad input or a numerical breakdown.
    pub fn is_physics(&self) -> bool {
        matches!(
            self,
            SymError::SymmetryViolation { .. } | SymError::PostulateViolation { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, SymError>;
