use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("letter {letter} outside the alphabet 1..={n}")]
    InvalidLetter { letter: usize, n: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("word of length {len} exceeds the truncation level {max_level}")]
    LevelOverflow { len: usize, max_level: usize },

    #[error("the empty word has no carry successor")]
    EmptyWord,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("dense dimension {dim} exceeds the limit {limit}")]
    TooLarge { dim: usize, limit: usize },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("dilation inexact: purity residual {residual:.3e} exceeds {tol:.3e}")]
    DilationInexact { residual: f64, tol: f64 },

    #[error("exactness window violated: {0}")]
    WindowViolation(String),

    #[error("degenerate window: {0}")]
    DegenerateWindow(String),

    #[error("subspace is not invariant: residual {residual:.3e} exceeds {tol:.3e}")]
    NotInvariant { residual: f64, tol: f64 },

    #[error("schema violation: {0}")]
    Schema(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Errors caused by malformed input rather than a failed check.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidLetter { .. }
                | Error::InvalidParameter(_)
                | Error::LevelOverflow { .. }
                | Error::DimensionMismatch(_)
                | Error::NonFinite(_)
                | Error::Schema(_)
                | Error::Json(_)
                | Error::Io(_)
                | Error::TooLarge { .. }
        )
    }
}
