use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix must be square and non-empty, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("dilation matrix is singular")]
    Singular,

    #[error("dilation matrix is not expansive: eigenvalue modulus {modulus:.12} <= 1")]
    NotExpansive { modulus: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("precondition violated: {what} (residual {residual:.3e}, tolerance {tolerance:.1e})")]
    Precondition {
        what: String,
        residual: f64,
        tolerance: f64,
    },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("polynomial is not real-valued: max |c_k - conj(c_-k)| = {0:.3e}")]
    NotReal(f64),

    #[error("polynomial is negative: min value {0:.3e}")]
    Negative(f64),

    #[error("factorization failed: {0}")]
    Factorization(String),

    #[error("sum-of-squares solver did not converge after {iterations} iterations (residual {residual:.3e})")]
    SosNotConverged { iterations: usize, residual: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn precondition(what: impl Into<String>, residual: f64, tolerance: f64) -> Self {
        Error::Precondition {
            what: what.into(),
            residual,
            tolerance,
        }
    }

    /// Wraps an error with the name of the pipeline stage that produced it.
    pub fn at_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

pub(crate) trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|e| e.at_stage(stage))
    }
}
