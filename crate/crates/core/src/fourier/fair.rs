use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{FairError, Result};
use crate::geometry::{rasterize, Coverage, IndicatorField, Polygon};
use crate::kernels::CovarianceKernel;

use super::cov::{CovMatrix, Method};
use super::fft::{Fft2, SpectralField};
use super::RegularGrid;

/// Kernel sampled on the torus: `c_circ[i, j] = c(min(i, n_x - i) dx, min(j, n_y - j) dy)`.
pub fn sample_kernel_circular(kernel: &CovarianceKernel, grid: &RegularGrid) -> Vec<f64> {
    let (nx, ny) = (grid.nx(), grid.ny());
    let lag_y: Vec<f64> = (0..ny).map(|j| j.min(ny - j) as f64 * grid.dy()).collect();
    let mut out = vec![0.0; nx * ny];
    out.par_chunks_mut(ny).enumerate().for_each(|(i, row)| {
        let lx = i.min(nx - i) as f64 * grid.dx();
        for (v, &ly) in row.iter_mut().zip(&lag_y) {
            *v = kernel.eval_dist(lx.hypot(ly));
        }
    });
    out
}

/// Transformed kernel `c_hat = DFT[c_circ]`, plus `c_circ[0, 0]`.
#[derive(Debug, Clone)]
pub struct KernelSpectrum {
    /// Real part of the transform; the torus sampling is even, so the
    /// imaginary part is rounding noise and is checked then dropped.
    values: Vec<f64>,
    variance: f64,
}

impl KernelSpectrum {
    pub fn new(kernel: &CovarianceKernel, grid: &RegularGrid, fft: &Fft2) -> Result<Self> {
        Self::from_field(&sample_kernel_circular(kernel, grid), fft)
    }

    /// From any even kernel field on the grid (e.g. a constant field).
    pub fn from_field(c_circ: &[f64], fft: &Fft2) -> Result<Self> {
        let mut data: Vec<Complex64> = c_circ.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        fft.forward(&mut data)?;
        let scale = data.iter().map(|c| c.re.abs()).fold(0.0, f64::max);
        let max_im = data.iter().map(|c| c.im.abs()).fold(0.0, f64::max);
        if max_im > 1e-10 * scale.max(f64::MIN_POSITIVE) {
            return Err(FairError::ImaginaryResidue {
                residue: max_im / scale,
            });
        }
        Ok(KernelSpectrum {
            values: data.iter().map(|c| c.re).collect(),
            variance: c_circ[0],
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Number of negative bins, the footprint of periodization.
    pub fn negative_bins(&self) -> usize {
        self.values.iter().filter(|&&v| v < 0.0).count()
    }
}

/// Precomputed region transforms on one grid. Reusable across kernels, which
/// is what makes likelihood sweeps cheap.
#[derive(Debug, Clone)]
pub struct FairEngine {
    grid: RegularGrid,
    fft: Fft2,
    transforms: Vec<Vec<Complex64>>,
    areas: Vec<f64>,
}

const CHUNK: usize = 2048;
const CHUNKS_PER_BLOCK: usize = 8;

impl FairEngine {
    /// Transforms every indicator field once.
    pub fn new(fields: &[IndicatorField]) -> Result<Self> {
        let first = fields
            .first()
            .ok_or_else(|| FairError::param("at least one region is required"))?;
        let grid = *first.grid();
        for f in fields {
            if !f.grid().same_layout(&grid) {
                return Err(FairError::mismatch(
                    format!("{grid:?}"),
                    format!("{:?}", f.grid()),
                ));
            }
        }
        let areas: Vec<f64> = fields.iter().map(IndicatorField::discrete_area).collect();
        if let Some(i) = areas.iter().position(|&a| !(a > 0.0)) {
            return Err(FairError::ZeroArea(i));
        }
        let fft = Fft2::for_grid(&grid);
        let transforms = fields
            .par_iter()
            .map(|f| {
                let mut data: Vec<Complex64> =
                    f.to_dense().into_iter().map(|v| Complex64::new(v, 0.0)).collect();
                let (i0, _, wi, _) = f.window();
                fft.forward_rows(&mut data, i0..i0 + wi).map(|_| data)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(FairEngine {
            grid,
            fft,
            transforms,
            areas,
        })
    }

    /// Rasterizes and transforms the regions.
    pub fn from_regions(regions: &[Polygon], grid: &RegularGrid, coverage: Coverage) -> Result<Self> {
        let fields = regions
            .par_iter()
            .map(|p| rasterize(p, grid, coverage))
            .collect::<Result<Vec<_>>>()?;
        Self::new(&fields)
    }

    pub fn grid(&self) -> &RegularGrid {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.areas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.areas.is_empty()
    }

    /// Discrete areas `|B_i| = sum(I_i) Delta`.
    pub fn areas(&self) -> &[f64] {
        &self.areas
    }

    pub fn transform(&self, i: usize) -> SpectralField {
        SpectralField {
            grid: self.grid,
            data: self.transforms[i].clone(),
        }
    }

    pub fn spectrum(&self, kernel: &CovarianceKernel) -> Result<KernelSpectrum> {
        KernelSpectrum::new(kernel, &self.grid, &self.fft)
    }

    pub fn spectrum_from_field(&self, c_circ: &[f64]) -> Result<KernelSpectrum> {
        if c_circ.len() != self.grid.len() {
            return Err(FairError::mismatch(self.grid.len(), c_circ.len()));
        }
        KernelSpectrum::from_field(c_circ, &self.fft)
    }

    pub fn cov_matrix(&self, kernel: &CovarianceKernel) -> Result<CovMatrix> {
        let spec = self.spectrum(kernel)?;
        let m = self.cov_from_spectrum(&spec)?;
        CovMatrix::new(m, Method::Fair, self.grid.nx(), Some(*kernel))
    }

    /// `K_ij = Delta^2 / (N |B_i| |B_j|) Re sum_m B_i[m] conj(B_j[m]) c_hat[m]`.
    ///
    /// With the unnormalized DFT this equals the circular spatial double sum
    /// `sum_{k,l} I_i[k] I_j[l] c_circ[k - l] Delta^2 / (|B_i| |B_j|)` exactly.
    pub fn cov_from_spectrum(&self, spec: &KernelSpectrum) -> Result<DMatrix<f64>> {
        let n = self.len();
        let total = self.grid.len();
        if spec.values.len() != total {
            return Err(FairError::mismatch(total, spec.values.len()));
        }
        let npairs = n * (n + 1) / 2;
        // Fixed blocks summed in order keep the result independent of the
        // thread schedule.
        let block = CHUNK * CHUNKS_PER_BLOCK;
        let partials: Vec<(Vec<f64>, Vec<f64>)> = (0..total.div_ceil(block))
            .into_par_iter()
            .map(|b| {
                let mut re = vec![0.0f64; npairs];
                let mut im = vec![0.0f64; npairs];
                let mut weighted = vec![Complex64::default(); CHUNK];
                let end = ((b + 1) * block).min(total);
                for lo in (b * block..end).step_by(CHUNK) {
                    let hi = (lo + CHUNK).min(end);
                    let ch = &spec.values[lo..hi];
                    let weighted = &mut weighted[..hi - lo];
                    let mut p = 0;
                    for i in 0..n {
                        for ((w, t), &cv) in
                            weighted.iter_mut().zip(&self.transforms[i][lo..hi]).zip(ch)
                        {
                            *w = t * cv;
                        }
                        for j in i..n {
                            let (mut sr, mut si) = (0.0, 0.0);
                            for (w, t) in weighted.iter().zip(&self.transforms[j][lo..hi]) {
                                sr += w.re * t.re + w.im * t.im;
                                si += w.im * t.re - w.re * t.im;
                            }
                            re[p] += sr;
                            im[p] += si;
                            p += 1;
                        }
                    }
                }
                (re, im)
            })
            .collect();
        let mut re = vec![0.0f64; npairs];
        let mut im = vec![0.0f64; npairs];
        for (pr, pi) in &partials {
            for (a, b) in re.iter_mut().zip(pr) {
                *a += b;
            }
            for (a, b) in im.iter_mut().zip(pi) {
                *a += b;
            }
        }

        let cell = self.grid.cell_area();
        let base = cell * cell / total as f64;
        let tol = 1e-10 * spec.variance.abs().max(f64::MIN_POSITIVE);
        let mut k = DMatrix::zeros(n, n);
        let mut p = 0;
        for i in 0..n {
            for j in i..n {
                let s = base / (self.areas[i] * self.areas[j]);
                let imag = im[p] * s;
                if imag.abs() > tol {
                    return Err(FairError::ImaginaryResidue { residue: imag.abs() });
                }
                k[(i, j)] = re[p] * s;
                k[(j, i)] = re[p] * s;
                p += 1;
            }
        }
        Ok(k)
    }

    /// Kriging surface `mean + (Delta / N) IDFT[DFT[phi] c_hat]` with
    /// `phi = sum_l beta_l / |B_l| I_l`. `mean_field` defaults to zero.
    pub fn predict_surface(
        &self,
        spec: &KernelSpectrum,
        beta: &[f64],
        mean_field: Option<&[f64]>,
    ) -> Result<Vec<f64>> {
        let total = self.grid.len();
        if beta.len() != self.len() {
            return Err(FairError::mismatch(self.len(), beta.len()));
        }
        if let Some(m) = mean_field {
            if m.len() != total {
                return Err(FairError::mismatch(total, m.len()));
            }
        }
        let mut phi = vec![Complex64::default(); total];
        phi.par_chunks_mut(CHUNK).enumerate().for_each(|(c, out)| {
            let lo = c * CHUNK;
            for (l, b) in beta.iter().enumerate() {
                let w = b / self.areas[l];
                if w == 0.0 {
                    continue;
                }
                for (o, t) in out.iter_mut().zip(&self.transforms[l][lo..]) {
                    *o += t * w;
                }
            }
            for (o, cv) in out.iter_mut().zip(&spec.values[lo..]) {
                *o *= cv;
            }
        });
        self.fft.inverse(&mut phi)?;
        let scale = self.grid.cell_area() / total as f64;
        let max_re = phi.iter().map(|c| c.re.abs()).fold(0.0, f64::max);
        let max_im = phi.iter().map(|c| c.im.abs()).fold(0.0, f64::max);
        if max_im > 1e-8 * max_re.max(f64::MIN_POSITIVE) {
            return Err(FairError::ImaginaryResidue {
                residue: max_im / max_re,
            });
        }
        Ok(phi
            .iter()
            .enumerate()
            .map(|(k, c)| c.re * scale + mean_field.map_or(0.0, |m| m[k]))
            .collect())
    }
}

/// One-shot FAIR covariance matrix for fields sharing `grid`.
pub fn fair_cov_matrix(
    fields: &[IndicatorField],
    kernel: &CovarianceKernel,
    grid: &RegularGrid,
) -> Result<CovMatrix> {
    if let Some(f) = fields.iter().find(|f| !f.grid().same_layout(grid)) {
        return Err(FairError::mismatch(format!("{grid:?}"), format!("{:?}", f.grid())));
    }
    FairEngine::new(fields)?.cov_matrix(kernel)
}

/// One-shot surface prediction; see [`FairEngine::predict_surface`].
pub fn predict_surface(
    fields: &[IndicatorField],
    beta: &[f64],
    kernel: &CovarianceKernel,
    grid: &RegularGrid,
    mean_field: &[f64],
) -> Result<Vec<f64>> {
    if let Some(f) = fields.iter().find(|f| !f.grid().same_layout(grid)) {
        return Err(FairError::mismatch(format!("{grid:?}"), format!("{:?}", f.grid())));
    }
    let engine = FairEngine::new(fields)?;
    let spec = engine.spectrum(kernel)?;
    engine.predict_surface(&spec, beta, Some(mean_field))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::rasterize_fractional;
    use crate::geometry::{random_polygons, RandomPolygonParams};
    use crate::kernels::{gaussian_rect_corr, Rectangle};

    fn rect_poly(r: &Rectangle) -> Polygon {
        Polygon::new(r.vertices()).unwrap()
    }

    // Spatial circular double sum, independent of any transform.
    fn circular_double_sum(f: &IndicatorField, g: &IndicatorField, c: &[f64], grid: &RegularGrid) -> f64 {
        let (nx, ny) = (grid.nx(), grid.ny());
        let mut s = 0.0;
        for (i, j, a) in f.nonzero() {
            for (k, l, b) in g.nonzero() {
                let di = (i + nx - k) % nx;
                let dj = (j + ny - l) % ny;
                s += a * b * c[di * ny + dj];
            }
        }
        s * grid.cell_area().powi(2) / (f.discrete_area() * g.discrete_area())
    }

    #[test]
    fn torus_sampling() {
        let g = RegularGrid::covering(-4.0, 4.0, 64).unwrap();
        let k = CovarianceKernel::gaussian(1.7, 1.0).unwrap();
        let c = sample_kernel_circular(&k, &g);
        assert_eq!(c[0], 1.7);
        for i in 1..64 {
            for j in 0..64 {
                assert_eq!(c[i * 64 + j], c[(64 - i) * 64 + j]);
            }
        }
        let unit = CovarianceKernel::gaussian(1.0, 1.0).unwrap();
        let c = sample_kernel_circular(&unit, &g);
        assert!((c[32 * 64] - (-8.0f64).exp()).abs() < 1e-18);
        assert!((c[32 * 64] - 3.35e-4).abs() < 1e-6);
    }

    #[test]
    fn constant_kernel_gives_constant_matrix() {
        let g = RegularGrid::covering(-3.0, 3.0, 32).unwrap();
        let regions = random_polygons(1, 4, (-1.5, 1.5), (0.4, 0.8), &RandomPolygonParams::default()).unwrap();
        let engine = FairEngine::from_regions(&regions, &g, Coverage::Supersample(4)).unwrap();
        let spec = engine.spectrum_from_field(&vec![2.0; g.len()]).unwrap();
        let k = engine.cov_from_spectrum(&spec).unwrap();
        for v in k.iter() {
            assert!((v - 2.0).abs() < 1e-12, "{v}");
        }
    }

    #[test]
    fn equals_circular_double_sum() {
        let g = RegularGrid::covering(-4.0, 4.0, 64).unwrap();
        let k = CovarianceKernel::matern(1.0, 0.5, 1.5).unwrap();
        let regions = random_polygons(9, 5, (-2.5, 2.5), (0.5, 1.0), &RandomPolygonParams::default()).unwrap();
        let fields: Vec<_> = regions.iter().map(|p| rasterize_fractional(p, &g, 4).unwrap()).collect();
        let fair = fair_cov_matrix(&fields, &k, &g).unwrap();
        let c = sample_kernel_circular(&k, &g);
        for i in 0..5 {
            for j in 0..5 {
                let want = circular_double_sum(&fields[i], &fields[j], &c, &g);
                let got = fair.matrix[(i, j)];
                assert!(((got - want) / want).abs() < 1e-10, "({i},{j}) {got} vs {want}");
            }
        }
    }

    #[test]
    fn gaussian_squares_close_to_ground_truth() {
        let a = Rectangle::unit_square_at(0.0);
        let b = Rectangle::unit_square_at(0.3);
        let regions = [rect_poly(&a), rect_poly(&b)];
        let k = CovarianceKernel::gaussian(1.0, 1.0).unwrap();
        let g = super::super::build_grid(&regions, &k, 1024).unwrap();
        let engine = FairEngine::from_regions(&regions, &g, Coverage::Supersample(4)).unwrap();
        let cov = engine.cov_matrix(&k).unwrap();
        let truth = gaussian_rect_corr(&a, &b).unwrap();
        assert!((cov.correlation(0, 1) - truth).abs() < 5e-3);
        assert!((cov.correlation(0, 1) - 0.926).abs() < 5e-3);
        // self-covariances lie strictly between 0 and sigma^2
        for i in 0..2 {
            assert!(cov.matrix[(i, i)] > 0.0 && cov.matrix[(i, i)] < 1.0);
        }
    }

    #[test]
    fn prediction_matches_direct_convolution() {
        let g = RegularGrid::covering(-3.0, 3.0, 32).unwrap();
        let k = CovarianceKernel::matern(1.0, 0.6, 1.5).unwrap();
        let regions = random_polygons(2, 2, (-1.0, 1.0), (0.6, 0.9), &RandomPolygonParams::default()).unwrap();
        let fields: Vec<_> = regions.iter().map(|p| rasterize_fractional(p, &g, 4).unwrap()).collect();
        let mean = vec![0.25; g.len()];
        let beta = [1.0, 0.0];
        let surf = predict_surface(&fields, &beta, &k, &g, &mean).unwrap();
        let c = sample_kernel_circular(&k, &g);
        let f = &fields[0];
        for u in 0..32 {
            for v in 0..32 {
                let mut s = 0.0;
                for (i, j, w) in f.nonzero() {
                    s += w * c[((u + 32 - i) % 32) * 32 + (v + 32 - j) % 32];
                }
                let want = s * g.cell_area() / f.discrete_area() + 0.25;
                let got = surf[g.index(u, v)];
                assert!((got - want).abs() < 1e-8 * want.abs(), "({u},{v})");
            }
        }
        // beta = 0 leaves the mean
        let flat = predict_surface(&fields, &[0.0, 0.0], &k, &g, &mean).unwrap();
        assert!(flat.iter().all(|&v| v == 0.25));
        // linear in beta
        let s1 = predict_surface(&fields, &[1.0, 0.0], &k, &g, &vec![0.0; g.len()]).unwrap();
        let s2 = predict_surface(&fields, &[0.0, 1.0], &k, &g, &vec![0.0; g.len()]).unwrap();
        let s12 = predict_surface(&fields, &[2.0, -3.0], &k, &g, &vec![0.0; g.len()]).unwrap();
        for t in 0..g.len() {
            assert!((s12[t] - (2.0 * s1[t] - 3.0 * s2[t])).abs() < 1e-12);
        }
        assert!(predict_surface(&fields, &[1.0], &k, &g, &mean).is_err());
    }

    #[test]
    fn mismatched_grids_rejected() {
        let g1 = RegularGrid::covering(-3.0, 3.0, 32).unwrap();
        let g2 = RegularGrid::covering(-3.0, 3.0, 64).unwrap();
        let p = Polygon::new(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]).unwrap();
        let f1 = rasterize_fractional(&p, &g1, 4).unwrap();
        let f2 = rasterize_fractional(&p, &g2, 4).unwrap();
        let k = CovarianceKernel::gaussian(1.0, 1.0).unwrap();
        assert!(fair_cov_matrix(&[f1.clone(), f2], &k, &g1).is_err());
        assert!(fair_cov_matrix(&[f1], &k, &g2).is_err());
    }
}
