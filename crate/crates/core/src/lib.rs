//! Regional covariance integrals for stationary Gaussian processes via the
//! discrete Fourier transform, with quadrature baselines, block kriging and
//! likelihood-based parameter estimation.

pub mod cli;
pub mod error;
pub mod fourier;
pub mod geometry;
pub mod inference;
pub mod kernels;
pub mod quadrature;

pub use error::{FairError, Result};
pub use fourier::{CovMatrix, FairEngine, Method, RegularGrid};
pub use geometry::{IndicatorField, Polygon, Region};
pub use kernels::CovarianceKernel;
