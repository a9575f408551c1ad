//! Grid construction, 2-D transforms, and the Fourier approximation of
//! regional covariance integrals and kriging surfaces.

mod cov;
mod fair;
mod fft;
mod grid;

pub use cov::{CovMatrix, Method};
pub use fair::{
    fair_cov_matrix, predict_surface, sample_kernel_circular, FairEngine, KernelSpectrum,
};
pub use fft::{dft2, dft2_real, idft2, Fft2, SpectralField};
pub use grid::{build_grid, build_grid_padded, default_extent, GridSpec, RegularGrid};

/// Default cells per axis.
pub const DEFAULT_RESOLUTION: usize = 1 << 10;
