use std::ops::Range;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::error::{FairError, Result};

use super::RegularGrid;

/// Complex field on the frequency grid mirroring a [`RegularGrid`], in the
/// same row-major layout (`j` fastest).
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    pub grid: RegularGrid,
    pub data: Vec<Complex64>,
}

/// Planned 2-D transforms for one grid shape.
///
/// Both directions are unnormalized: `inverse(forward(f)) == n_x * n_y * f`.
#[derive(Clone)]
pub struct Fft2 {
    nx: usize,
    ny: usize,
    fwd_x: Arc<dyn Fft<f64>>,
    fwd_y: Arc<dyn Fft<f64>>,
    inv_x: Arc<dyn Fft<f64>>,
    inv_y: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Fft2 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fft2").field("nx", &self.nx).field("ny", &self.ny).finish()
    }
}

const ROWS_PER_TASK: usize = 16;

impl Fft2 {
    pub fn new(nx: usize, ny: usize) -> Self {
        let mut planner = FftPlanner::new();
        Fft2 {
            nx,
            ny,
            fwd_x: planner.plan_fft_forward(nx),
            fwd_y: planner.plan_fft_forward(ny),
            inv_x: planner.plan_fft_inverse(nx),
            inv_y: planner.plan_fft_inverse(ny),
        }
    }

    pub fn for_grid(grid: &RegularGrid) -> Self {
        Self::new(grid.nx(), grid.ny())
    }

    pub fn forward(&self, data: &mut [Complex64]) -> Result<()> {
        self.run(data, &self.fwd_x, &self.fwd_y, 0..self.nx)
    }

    /// Forward transform of a field whose rows outside `rows` are zero; the
    /// first pass skips them.
    pub fn forward_rows(&self, data: &mut [Complex64], rows: Range<usize>) -> Result<()> {
        if rows.start > rows.end || rows.end > self.nx {
            return Err(FairError::param(format!("row range {rows:?} outside 0..{}", self.nx)));
        }
        self.run(data, &self.fwd_x, &self.fwd_y, rows)
    }

    pub fn inverse(&self, data: &mut [Complex64]) -> Result<()> {
        self.run(data, &self.inv_x, &self.inv_y, 0..self.nx)
    }

    fn run(
        &self,
        data: &mut [Complex64],
        along_x: &Arc<dyn Fft<f64>>,
        along_y: &Arc<dyn Fft<f64>>,
        rows: Range<usize>,
    ) -> Result<()> {
        let (nx, ny) = (self.nx, self.ny);
        if data.len() != nx * ny {
            return Err(FairError::mismatch(
                format!("{nx}x{ny} = {}", nx * ny),
                data.len(),
            ));
        }
        rows_in_place(&mut data[rows.start * ny..rows.end * ny], ny, along_y);
        let mut t = transpose(data, nx, ny);
        rows_in_place(&mut t, nx, along_x);
        let back = transpose(&t, ny, nx);
        data.copy_from_slice(&back);
        Ok(())
    }
}

fn rows_in_place(data: &mut [Complex64], len: usize, fft: &Arc<dyn Fft<f64>>) {
    data.par_chunks_mut(len * ROWS_PER_TASK).for_each(|chunk| {
        let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
        fft.process_with_scratch(chunk, &mut scratch);
    });
}

// (rows x cols) -> (cols x rows)
fn transpose(src: &[Complex64], rows: usize, cols: usize) -> Vec<Complex64> {
    const B: usize = 32;
    let mut dst = vec![Complex64::default(); src.len()];
    for rb in (0..rows).step_by(B) {
        for cb in (0..cols).step_by(B) {
            for r in rb..(rb + B).min(rows) {
                for c in cb..(cb + B).min(cols) {
                    dst[c * rows + r] = src[r * cols + c];
                }
            }
        }
    }
    dst
}

/// Unnormalized forward DFT of a real field.
pub fn dft2_real(grid: &RegularGrid, field: &[f64]) -> Result<SpectralField> {
    let data: Vec<Complex64> = field.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    dft2(grid, data)
}

/// Unnormalized forward DFT of a complex field.
pub fn dft2(grid: &RegularGrid, mut data: Vec<Complex64>) -> Result<SpectralField> {
    Fft2::for_grid(grid).forward(&mut data)?;
    Ok(SpectralField { grid: *grid, data })
}

/// Unnormalized inverse DFT; `idft2(dft2(f)) = N f`.
pub fn idft2(spec: &SpectralField) -> Result<Vec<Complex64>> {
    let mut data = spec.data.clone();
    Fft2::for_grid(&spec.grid).inverse(&mut data)?;
    Ok(data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use std::f64::consts::TAU;

    fn grid(nx: usize, ny: usize) -> RegularGrid {
        RegularGrid::new([0.0, 0.0], nx, ny, 1.0, 1.0).unwrap()
    }

    fn naive_dft(f: &[f64], nx: usize, ny: usize) -> Vec<Complex64> {
        let mut out = vec![Complex64::default(); nx * ny];
        for u in 0..nx {
            for v in 0..ny {
                let mut acc = Complex64::default();
                for i in 0..nx {
                    for j in 0..ny {
                        let ph = -TAU * ((u * i) as f64 / nx as f64 + (v * j) as f64 / ny as f64);
                        acc += f[i * ny + j] * Complex64::from_polar(1.0, ph);
                    }
                }
                out[u * ny + v] = acc;
            }
        }
        out
    }

    #[test]
    fn constant_field_has_only_dc() {
        let g = grid(8, 16);
        let s = dft2_real(&g, &vec![2.5; 128]).unwrap();
        assert!((s.data[0] - Complex64::new(2.5 * 128.0, 0.0)).norm() < 1e-12);
        assert!(s.data[1..].iter().all(|c| c.norm() < 1e-12));
    }

    #[test]
    fn matches_naive_dft_on_rectangular_grid() {
        let (nx, ny) = (8, 16);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let f: Vec<f64> = (0..nx * ny).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let s = dft2_real(&grid(nx, ny), &f).unwrap();
        let want = naive_dft(&f, nx, ny);
        for (a, b) in s.data.iter().zip(&want) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn round_trip_and_parseval() {
        let g = grid(32, 64);
        let n = g.len() as f64;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let f: Vec<f64> = (0..g.len()).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let s = dft2_real(&g, &f).unwrap();
        let back = idft2(&s).unwrap();
        for (b, a) in back.iter().zip(&f) {
            assert!((b.re / n - a).abs() < 1e-12 && (b.im / n).abs() < 1e-12);
        }
        let energy: f64 = f.iter().map(|v| v * v).sum();
        let spec: f64 = s.data.iter().map(|c| c.norm_sqr()).sum::<f64>() / n;
        assert!(((energy - spec) / energy).abs() < 1e-10);
    }

    #[test]
    fn skipping_zero_rows() {
        let g = grid(16, 8);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let mut f = vec![Complex64::default(); 128];
        for v in &mut f[5 * 8..9 * 8] {
            *v = Complex64::new(rng.gen_range(-1.0..1.0), 0.0);
        }
        let mut a = f.clone();
        let fft = Fft2::for_grid(&g);
        fft.forward(&mut a).unwrap();
        fft.forward_rows(&mut f, 5..9).unwrap();
        assert_eq!(a, f);
        assert!(fft.forward_rows(&mut f, 5..17).is_err());
    }

    #[test]
    fn length_mismatch() {
        assert!(dft2_real(&grid(8, 8), &[0.0; 10]).is_err());
    }
}
