//! Direct quadrature baselines: the Riemann double sum over a shared grid
//! and the per-region centered scheme with a fixed point density.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{FairError, Result};
use crate::fourier::{CovMatrix, Method, RegularGrid};
use crate::geometry::{Point, Polygon};
use crate::kernels::CovarianceKernel;

/// Upper bound on kernel evaluations per work item.
const PAIR_BLOCK: usize = 1 << 22;

/// Grid points (cell centers) falling inside one region.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionPoints {
    pub cells: Vec<(usize, usize)>,
    pub coords: Vec<Point>,
}

impl RegionPoints {
    /// Cell centers of `grid` inside `poly` under the half-open boundary rule.
    pub fn on_grid(poly: &Polygon, grid: &RegularGrid) -> Self {
        let bb = poly.bounding_box();
        let [ox, oy] = grid.origin();
        let span = |lo: f64, hi: f64, o: f64, d: f64, n: usize| {
            let a = (((lo - o) / d).floor() as i64 - 1).clamp(0, n as i64 - 1) as usize;
            let b = (((hi - o) / d).floor() as i64 + 1).clamp(0, n as i64 - 1) as usize;
            a..=b
        };
        let mut cells = Vec::new();
        let mut coords = Vec::new();
        for i in span(bb.min[0], bb.max[0], ox, grid.dx(), grid.nx()) {
            for j in span(bb.min[1], bb.max[1], oy, grid.dy(), grid.ny()) {
                let c = grid.cell_center(i, j);
                if poly.contains(c) {
                    cells.push((i, j));
                    coords.push(c);
                }
            }
        }
        RegionPoints { cells, coords }
    }

    /// Centers of a `density x density` partition of the bounding box that
    /// fall inside `poly`.
    pub fn centered(poly: &Polygon, density: usize) -> Self {
        let bb = poly.bounding_box();
        let (w, h) = (bb.width() / density as f64, bb.height() / density as f64);
        let mut coords = Vec::new();
        for a in 0..density {
            for b in 0..density {
                let p = [
                    bb.min[0] + (a as f64 + 0.5) * w,
                    bb.min[1] + (b as f64 + 0.5) * h,
                ];
                if poly.contains(p) {
                    coords.push(p);
                }
            }
        }
        RegionPoints {
            cells: Vec::new(),
            coords,
        }
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }
}

/// Region point sets, built once and reused across kernels.
#[derive(Debug, Clone)]
pub struct QuadratureEngine {
    method: Method,
    resolution: usize,
    grid: Option<RegularGrid>,
    points: Vec<RegionPoints>,
}

fn region_name(ids: Option<&[String]>, i: usize) -> String {
    ids.and_then(|ids| ids.get(i))
        .map_or_else(|| format!("#{i}"), |id| format!("{id:?}"))
}

impl QuadratureEngine {
    /// Riemann points: every grid cell center inside each region.
    pub fn riemann(regions: &[Polygon], grid: &RegularGrid, ids: Option<&[String]>) -> Result<Self> {
        let points: Vec<RegionPoints> = regions
            .par_iter()
            .map(|p| RegionPoints::on_grid(p, grid))
            .collect();
        if let Some(i) = points.iter().position(RegionPoints::is_empty) {
            return Err(FairError::EmptyRegion {
                region: region_name(ids, i),
                hint: " on this grid; use a finer resolution".into(),
            });
        }
        Ok(QuadratureEngine {
            method: Method::Riemann,
            resolution: grid.nx(),
            grid: Some(*grid),
            points,
        })
    }

    /// Per-region centered points at `density` per axis.
    pub fn jh(regions: &[Polygon], density: usize, ids: Option<&[String]>) -> Result<Self> {
        if density == 0 {
            return Err(FairError::param("density must be >= 1"));
        }
        let points: Vec<RegionPoints> = regions
            .iter()
            .map(|p| RegionPoints::centered(p, density))
            .collect();
        if let Some(i) = points.iter().position(RegionPoints::is_empty) {
            return Err(FairError::EmptyRegion {
                region: region_name(ids, i),
                hint: format!(" at density {density}; increase the density"),
            });
        }
        Ok(QuadratureEngine {
            method: Method::Jh,
            resolution: density,
            grid: None,
            points,
        })
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn points(&self) -> &[RegionPoints] {
        &self.points
    }

    pub fn point_counts(&self) -> Vec<usize> {
        self.points.iter().map(RegionPoints::len).collect()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `K_ij = (1 / (L_i L_j)) sum c(s_k - s_l)` with true Euclidean lags.
    pub fn cov_matrix(&self, kernel: &CovarianceKernel) -> Result<CovMatrix> {
        let m = self.pair_means(|a, b| {
            let mut s = 0.0;
            for p in a {
                for q in b {
                    s += kernel.correlation((p[0] - q[0]).hypot(p[1] - q[1]));
                }
            }
            s
        });
        CovMatrix::new(m * kernel.sigma2(), self.method, self.resolution, Some(*kernel))
    }

    /// Riemann double sum with a torus-sampled kernel field in place of the
    /// kernel, lags taken modulo the grid. Only for grid-based point sets.
    pub fn cov_matrix_circular(&self, c_circ: &[f64]) -> Result<DMatrix<f64>> {
        let grid = self
            .grid
            .ok_or_else(|| FairError::param("circular sums need grid-based points"))?;
        if c_circ.len() != grid.len() {
            return Err(FairError::mismatch(grid.len(), c_circ.len()));
        }
        let (nx, ny) = (grid.nx(), grid.ny());
        let cells: Vec<&[(usize, usize)]> = self.points.iter().map(|p| p.cells.as_slice()).collect();
        Ok(self.pair_means_by(&cells, |a, b| {
            let mut s = 0.0;
            for &(i, j) in a {
                for &(k, l) in b {
                    s += c_circ[((i + nx - k) % nx) * ny + (j + ny - l) % ny];
                }
            }
            s
        }))
    }

    /// `k(s)_i = (1 / L_i) sum_k c(s - s_k)` for each target.
    pub fn cross_vector(
        &self,
        region: usize,
        kernel: &CovarianceKernel,
        targets: &[Point],
    ) -> Result<Vec<f64>> {
        let pts = self
            .points
            .get(region)
            .ok_or_else(|| FairError::param(format!("no region {region}")))?;
        riemann_cross_vector(&pts.coords, kernel, targets)
    }

    fn pair_means<F>(&self, sum: F) -> DMatrix<f64>
    where
        F: Fn(&[Point], &[Point]) -> f64 + Sync,
    {
        let coords: Vec<&[Point]> = self.points.iter().map(|p| p.coords.as_slice()).collect();
        self.pair_means_by(&coords, sum)
    }

    // Symmetric matrix of pair sums divided by L_i L_j. Large pairs are split
    // into row blocks of at most PAIR_BLOCK evaluations, combined in order.
    fn pair_means_by<T, F>(&self, sets: &[&[T]], sum: F) -> DMatrix<f64>
    where
        T: Sync,
        F: Fn(&[T], &[T]) -> f64 + Sync,
    {
        let n = sets.len();
        let mut tasks = Vec::new();
        for i in 0..n {
            for j in i..n {
                let rows = (PAIR_BLOCK / sets[j].len().max(1)).max(1);
                for start in (0..sets[i].len()).step_by(rows) {
                    tasks.push((i, j, start, (start + rows).min(sets[i].len())));
                }
            }
        }
        let partial: Vec<f64> = tasks
            .par_iter()
            .map(|&(i, j, a, b)| sum(&sets[i][a..b], sets[j]))
            .collect();
        let mut m = DMatrix::zeros(n, n);
        for (&(i, j, _, _), s) in tasks.iter().zip(partial) {
            m[(i, j)] += s;
        }
        for i in 0..n {
            for j in i..n {
                let v = m[(i, j)] / (sets[i].len() as f64 * sets[j].len() as f64);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        m
    }
}

/// Riemann covariance matrix on `grid`.
pub fn riemann_cov_matrix(
    regions: &[Polygon],
    kernel: &CovarianceKernel,
    grid: &RegularGrid,
) -> Result<CovMatrix> {
    QuadratureEngine::riemann(regions, grid, None)?.cov_matrix(kernel)
}

/// Centered per-region quadrature with `density x density` points.
pub fn jh_cov_matrix(
    regions: &[Polygon],
    kernel: &CovarianceKernel,
    density: usize,
) -> Result<CovMatrix> {
    QuadratureEngine::jh(regions, density, None)?.cov_matrix(kernel)
}

/// Covariance between the point values at `targets` and the mean over
/// `points`.
pub fn riemann_cross_vector(
    points: &[Point],
    kernel: &CovarianceKernel,
    targets: &[Point],
) -> Result<Vec<f64>> {
    if points.is_empty() {
        return Err(FairError::EmptyRegion {
            region: "(cross vector)".into(),
            hint: String::new(),
        });
    }
    let norm = kernel.sigma2() / points.len() as f64;
    Ok(targets
        .par_iter()
        .map(|t| {
            points
                .iter()
                .map(|p| kernel.correlation((t[0] - p[0]).hypot(t[1] - p[1])))
                .sum::<f64>()
                * norm
        })
        .collect())
}
