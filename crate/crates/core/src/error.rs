use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = DosError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum DosError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("matrix market parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("unsupported matrix market file: {0}")]
    Unsupported(String),

    #[error("matrix is not symmetric: entry ({row}, {col}) has no matching transpose")]
    NotSymmetric { row: usize, col: usize },

    #[error("index ({row}, {col}) out of range for dimension {dim}")]
    IndexOutOfRange { row: usize, col: usize, dim: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid spectral interval [{lower}, {upper}]")]
    InvalidInterval { lower: f64, upper: f64 },

    #[error("lanczos breakdown: {0}")]
    Breakdown(String),

    #[error(
        "non-finite value in {context} at step {step}; the spectrum probably escapes [-1, 1], \
         widen the spectral interval (larger margin or more lanczos steps)"
    )]
    NonFinite { context: &'static str, step: usize },

    #[error("evaluation point {0} lies outside the open interval (-1, 1)")]
    OutsideDomain(f64),

    #[error("matrix dimension {dim} exceeds the dense oracle cap {cap}")]
    OracleCap { dim: usize, cap: usize },

    #[error("stored vectors need {required} bytes, budget is {budget}")]
    MemoryBudget { required: usize, budget: usize },

    #[error("grid spacing {spacing} is too coarse for sigma {sigma} (need at least 8 points per sigma)")]
    GridTooCoarse { spacing: f64, sigma: f64 },

    #[error("eigenvalue {0} is negative; heat capacity needs a non-negative spectrum")]
    NegativeEigenvalue(f64),
}

impl DosError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        DosError::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            DosError::NonFinite { .. } | DosError::Breakdown(_) | DosError::NegativeEigenvalue(_)
        )
    }
}
