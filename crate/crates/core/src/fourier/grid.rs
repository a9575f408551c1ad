use serde::{Deserialize, Serialize};

use crate::error::{FairError, Result};
use crate::geometry::{BoundingBox, Point, Polygon};
use crate::kernels::CovarianceKernel;

/// Regular lattice of `n_x x n_y` cells starting at `origin` (the lower-left
/// corner). Each cell is represented by the grid point at its center.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridSpec", into = "GridSpec")]
pub struct RegularGrid {
    origin: Point,
    nx: usize,
    ny: usize,
    dx: f64,
    dy: f64,
}

/// Serialized grid layout, also used as the sidecar of binary surfaces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub origin: Point,
    pub n_x: usize,
    pub n_y: usize,
    pub delta_x: f64,
    pub delta_y: f64,
}

impl TryFrom<GridSpec> for RegularGrid {
    type Error = FairError;
    fn try_from(s: GridSpec) -> Result<Self> {
        RegularGrid::new(s.origin, s.n_x, s.n_y, s.delta_x, s.delta_y)
    }
}

impl From<RegularGrid> for GridSpec {
    fn from(g: RegularGrid) -> Self {
        GridSpec {
            origin: g.origin,
            n_x: g.nx,
            n_y: g.ny,
            delta_x: g.dx,
            delta_y: g.dy,
        }
    }
}

fn check_dyadic(n: usize, axis: &str) -> Result<()> {
    if n < 8 || !n.is_power_of_two() {
        return Err(FairError::InvalidGrid(format!(
            "{axis} resolution must be a power of two >= 8, got {n}"
        )));
    }
    Ok(())
}

impl RegularGrid {
    pub fn new(origin: Point, nx: usize, ny: usize, dx: f64, dy: f64) -> Result<Self> {
        check_dyadic(nx, "x")?;
        check_dyadic(ny, "y")?;
        if !(dx > 0.0 && dy > 0.0 && dx.is_finite() && dy.is_finite()) {
            return Err(FairError::InvalidGrid(format!(
                "spacings must be positive, got ({dx}, {dy})"
            )));
        }
        if !(origin[0].is_finite() && origin[1].is_finite()) {
            return Err(FairError::InvalidGrid("non-finite origin".into()));
        }
        Ok(RegularGrid {
            origin,
            nx,
            ny,
            dx,
            dy,
        })
    }

    /// Square grid of side `extent` centered on `center`.
    pub fn square(center: Point, extent: f64, resolution: usize) -> Result<Self> {
        let d = extent / resolution as f64;
        let half = 0.5 * extent;
        Self::new(
            [center[0] - half, center[1] - half],
            resolution,
            resolution,
            d,
            d,
        )
    }

    /// Square grid covering `[lo, hi]^2`.
    pub fn covering(lo: f64, hi: f64, resolution: usize) -> Result<Self> {
        let c = 0.5 * (lo + hi);
        Self::square([c, c], hi - lo, resolution)
    }

    pub fn origin(&self) -> Point {
        self.origin
    }
    pub fn nx(&self) -> usize {
        self.nx
    }
    pub fn ny(&self) -> usize {
        self.ny
    }
    pub fn dx(&self) -> f64 {
        self.dx
    }
    pub fn dy(&self) -> f64 {
        self.dy
    }

    /// Number of grid points `N = n_x n_y`.
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Cell area `Delta = dx dy`.
    pub fn cell_area(&self) -> f64 {
        self.dx * self.dy
    }

    pub fn extent(&self) -> [f64; 2] {
        [self.nx as f64 * self.dx, self.ny as f64 * self.dy]
    }

    pub fn bounds(&self) -> BoundingBox {
        let e = self.extent();
        BoundingBox {
            min: self.origin,
            max: [self.origin[0] + e[0], self.origin[1] + e[1]],
        }
    }

    #[inline]
    pub fn x_center(&self, i: usize) -> f64 {
        self.origin[0] + (i as f64 + 0.5) * self.dx
    }

    #[inline]
    pub fn y_center(&self, j: usize) -> f64 {
        self.origin[1] + (j as f64 + 0.5) * self.dy
    }

    #[inline]
    pub fn cell_center(&self, i: usize, j: usize) -> Point {
        [self.x_center(i), self.y_center(j)]
    }

    /// Row-major flat index, `j` (y) fastest.
    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.ny + j
    }

    pub fn same_layout(&self, other: &RegularGrid) -> bool {
        self == other
    }
}

/// Side length of the square computational domain: the larger of
/// `L + 2 theta_0.25` and `2 theta_0.05`, where `L` is the larger side of the
/// regions' joint bounding box.
pub fn default_extent(bbox: &BoundingBox, kernel: &CovarianceKernel) -> Result<f64> {
    let l = bbox.width().max(bbox.height());
    let buffer = kernel.correlation_range(0.25)?;
    let span = kernel.correlation_range(0.05)?;
    Ok((l + 2.0 * buffer).max(2.0 * span))
}

/// Square grid centered on the regions' joint bounding box with the default
/// extent.
pub fn build_grid(
    regions: &[Polygon],
    kernel: &CovarianceKernel,
    resolution: usize,
) -> Result<RegularGrid> {
    build_grid_padded(regions, kernel, resolution, 0.0)
}

/// As [`build_grid`], with `padding` added to the extent.
pub fn build_grid_padded(
    regions: &[Polygon],
    kernel: &CovarianceKernel,
    resolution: usize,
    padding: f64,
) -> Result<RegularGrid> {
    check_dyadic(resolution, "grid")?;
    let bbox = BoundingBox::of_polygons(regions)
        .ok_or_else(|| FairError::param("at least one region is required"))?;
    let extent = default_extent(&bbox, kernel)? + padding;
    RegularGrid::square(bbox.center(), extent, resolution)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(lo: f64, hi: f64) -> Polygon {
        Polygon::new(vec![[lo, lo], [hi, lo], [hi, hi], [lo, hi]]).unwrap()
    }

    #[test]
    fn extent_rule() {
        let g = CovarianceKernel::gaussian(1.0, 1.0).unwrap();
        let grid = build_grid(&[square(0.0, 1.0)], &g, 64).unwrap();
        let want = 2.0 * (2.0 * 20f64.ln()).sqrt();
        assert!((grid.extent()[0] - want).abs() < 1e-12);
        assert!((grid.extent()[0] - 4.896).abs() < 1e-3);
        assert!((grid.bounds().center()[0] - 0.5).abs() < 1e-12);

        let m = CovarianceKernel::matern(1.0, 0.5, 1.5).unwrap();
        let grid = build_grid(&[square(-10.0, 10.0)], &m, 64).unwrap();
        let want = 20.0 + 2.0 * m.correlation_range(0.25).unwrap();
        assert!((grid.extent()[0] - want).abs() < 1e-12);
        assert!((grid.extent()[0] - 22.69).abs() < 1e-2);
    }

    #[test]
    fn tiny_region_uses_span_branch() {
        // theta_0.05 = 2 for an exponential kernel with theta = 2 / ln 20
        let e = CovarianceKernel::exponential(1.0, 2.0 / 20f64.ln()).unwrap();
        let grid = build_grid(&[square(0.0, 1e-9)], &e, 32).unwrap();
        assert!((grid.extent()[0] - 4.0).abs() < 1e-8);
    }

    #[test]
    fn padding_adds_to_extent() {
        let g = CovarianceKernel::gaussian(1.0, 1.0).unwrap();
        let a = build_grid(&[square(0.0, 1.0)], &g, 64).unwrap();
        let b = build_grid_padded(&[square(0.0, 1.0)], &g, 64, 1.0).unwrap();
        assert!((b.extent()[0] - a.extent()[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_non_dyadic() {
        let g = CovarianceKernel::gaussian(1.0, 1.0).unwrap();
        assert!(build_grid(&[square(0.0, 1.0)], &g, 100).is_err());
        assert!(build_grid(&[square(0.0, 1.0)], &g, 4).is_err());
        assert!(build_grid(&[], &g, 64).is_err());
        assert!(RegularGrid::new([0.0, 0.0], 16, 16, 0.0, 1.0).is_err());
    }

    #[test]
    fn grid_json() {
        let g = RegularGrid::new([1.0, -2.0], 16, 32, 0.5, 0.25).unwrap();
        let s = serde_json::to_string(&g).unwrap();
        assert!(s.contains("\"n_x\":16") && s.contains("\"delta_y\":0.25"));
        assert_eq!(serde_json::from_str::<RegularGrid>(&s).unwrap(), g);
    }
}
