use std::path::PathBuf;

use nalgebra::DMatrix;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, FairError>;

#[derive(Debug, Error)]
pub enum FairError {
    #[error("invalid polygon: {0}")]
    InvalidPolygon(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("region extends beyond grid extent by {overflow:?} (left, right, bottom, top)")]
    OutsideGrid { overflow: [f64; 4] },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: String, got: String },

    #[error("region {region} has no quadrature points{hint}")]
    EmptyRegion { region: String, hint: String },

    #[error("region {0} has zero discrete area on this grid")]
    ZeroArea(usize),

    #[error("matrix is not positive definite ({context})")]
    NotPositiveDefinite {
        context: String,
        matrix: Box<DMatrix<f64>>,
    },

    #[error("imaginary residue {residue:e} exceeds tolerance")]
    ImaginaryResidue { residue: f64 },

    #[error("all {count} candidates failed: {diagnostics}")]
    AllCandidatesFailed { count: usize, diagnostics: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl FairError {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        FairError::InvalidParameter(msg.into())
    }

    pub(crate) fn mismatch(expected: impl ToString, got: impl ToString) -> Self {
        FairError::DimensionMismatch {
            expected: expected.to_string(),
            got: got.to_string(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        FairError::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures caused by the numbers rather than by the inputs' shape.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            FairError::NotPositiveDefinite { .. }
                | FairError::ImaginaryResidue { .. }
                | FairError::AllCandidatesFailed { .. }
                | FairError::ZeroArea(_)
        )
    }
}
