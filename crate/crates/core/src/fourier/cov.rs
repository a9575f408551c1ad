use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{FairError, Result};
use crate::kernels::CovarianceKernel;

/// How a covariance matrix was approximated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Fair,
    Riemann,
    Jh,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Fair => "fair",
            Method::Riemann => "riemann",
            Method::Jh => "jh",
        })
    }
}

impl std::str::FromStr for Method {
    type Err = FairError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fair" => Ok(Method::Fair),
            "riemann" | "direct" => Ok(Method::Riemann),
            "jh" => Ok(Method::Jh),
            other => Err(FairError::param(format!("unknown method {other:?}"))),
        }
    }
}

/// Symmetric matrix of regional covariances with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct CovMatrix {
    pub matrix: DMatrix<f64>,
    pub method: Method,
    /// Grid cells per axis (fair, riemann) or points per axis (jh).
    pub resolution: usize,
    /// `None` when built from a raw kernel field.
    pub kernel: Option<CovarianceKernel>,
}

impl CovMatrix {
    /// Checks symmetry to 1e-12 relative and positive diagonal.
    pub fn new(
        matrix: DMatrix<f64>,
        method: Method,
        resolution: usize,
        kernel: Option<CovarianceKernel>,
    ) -> Result<Self> {
        if !matrix.is_square() {
            return Err(FairError::mismatch(
                "square matrix",
                format!("{}x{}", matrix.nrows(), matrix.ncols()),
            ));
        }
        let n = matrix.nrows();
        let scale = matrix.amax();
        for i in 0..n {
            if !(matrix[(i, i)] > 0.0) {
                return Err(FairError::NotPositiveDefinite {
                    context: format!("diagonal entry {i} is {}", matrix[(i, i)]),
                    matrix: Box::new(matrix),
                });
            }
            for j in 0..i {
                if (matrix[(i, j)] - matrix[(j, i)]).abs() > 1e-12 * scale {
                    return Err(FairError::param(format!("matrix not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(CovMatrix {
            matrix,
            method,
            resolution,
            kernel,
        })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn correlation(&self, i: usize, j: usize) -> f64 {
        let m = &self.matrix;
        m[(i, j)] / (m[(i, i)] * m[(j, j)]).sqrt()
    }
}
