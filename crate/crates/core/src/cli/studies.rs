//! The accuracy study on pairs of unit squares and the FAIR versus direct
//! consistency and timing study on random polygons.

use std::fmt::Write as _;
use std::time::Instant;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{FairError, Result};
use crate::fourier::{build_grid_padded, FairEngine, RegularGrid};
use crate::geometry::{random_polygons, Coverage, Polygon, RandomPolygonParams};
use crate::inference::{kl_div, maed, rmsed};
use crate::kernels::{gaussian_rect_corr, CovarianceKernel, KernelFamily, Rectangle};
use crate::quadrature::QuadratureEngine;

use super::config::{AccuracyConfig, ConsistencyConfig, ExtentMode};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AccuracyRow {
    pub delta: f64,
    pub resolution: usize,
    pub extent: f64,
    pub fair_corr: f64,
    pub truth_corr: f64,
    pub abs_error: f64,
}

/// Correlation of the averages over `a` and `b` under a Gaussian kernel of
/// any range, by rescaling to unit range.
pub fn gaussian_truth(kernel: &CovarianceKernel, a: &Rectangle, b: &Rectangle) -> Result<f64> {
    if kernel.family() != KernelFamily::Gaussian {
        return Err(FairError::param("closed-form truth needs a gaussian kernel"));
    }
    let t = kernel.theta();
    let scale = |r: &Rectangle| Rectangle::new([r.x[0] / t, r.x[1] / t], [r.y[0] / t, r.y[1] / t]);
    gaussian_rect_corr(&scale(a)?, &scale(b)?)
}

fn polygon(r: &Rectangle) -> Polygon {
    Polygon::new(r.vertices()).expect("rectangles are valid polygons")
}

/// One FAIR correlation for the unit squares offset by `delta` along the
/// diagonal.
pub fn accuracy_point(
    kernel: &CovarianceKernel,
    delta: f64,
    resolution: usize,
    padding: f64,
    coverage: Coverage,
) -> Result<AccuracyRow> {
    let a = Rectangle::unit_square_at(0.0);
    let b = Rectangle::unit_square_at(delta);
    let regions = [polygon(&a), polygon(&b)];
    let grid = build_grid_padded(&regions, kernel, resolution, padding)?;
    let cov = FairEngine::from_regions(&regions, &grid, coverage)?.cov_matrix(kernel)?;
    let fair_corr = cov.correlation(0, 1);
    let truth_corr = gaussian_truth(kernel, &a, &b)?;
    Ok(AccuracyRow {
        delta,
        resolution,
        extent: grid.extent()[0],
        fair_corr,
        truth_corr,
        abs_error: (fair_corr - truth_corr).abs(),
    })
}

pub fn accuracy_study(cfg: &AccuracyConfig) -> Result<Vec<AccuracyRow>> {
    let padding = match cfg.extent_mode {
        ExtentMode::Default => 0.0,
        ExtentMode::Extended => cfg.padding,
    };
    let mut rows = Vec::new();
    for &delta in &cfg.deltas {
        for &res in &cfg.resolutions {
            rows.push(accuracy_point(&cfg.kernel, delta, res, padding, cfg.coverage)?);
        }
    }
    Ok(rows)
}

fn header(command: &str, cfg: &impl Serialize) -> Result<String> {
    Ok(format!("# fair {command}\n# config: {}\n", serde_json::to_string(cfg)?))
}

pub fn accuracy_csv(cfg: &AccuracyConfig, rows: &[AccuracyRow]) -> Result<String> {
    let mut out = header("accuracy-study", cfg)?;
    out.push_str("delta,resolution,extent,fair_corr,truth_corr,abs_error\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{:e}",
            r.delta, r.resolution, r.extent, r.fair_corr, r.truth_corr, r.abs_error
        );
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConsistencyRow {
    pub resolution: usize,
    pub delta_x: f64,
    pub rmsed: f64,
    pub maed: f64,
    pub kl: Option<f64>,
    pub time_fair: Option<f64>,
    pub time_direct: Option<f64>,
    /// Against the direct matrix at the highest resolution.
    pub rmsed_fair_hr: f64,
    pub rmsed_direct_hr: Option<f64>,
    pub maed_fair_hr: f64,
    pub maed_direct_hr: Option<f64>,
    pub kl_fair_hr: Option<f64>,
    pub kl_direct_hr: Option<f64>,
    pub min_points: usize,
    pub max_points: usize,
}

#[derive(Debug, Clone)]
pub struct ConsistencyReport {
    pub polygons: Vec<Polygon>,
    pub rows: Vec<ConsistencyRow>,
    pub fair: Vec<DMatrix<f64>>,
    pub direct: Vec<DMatrix<f64>>,
}

pub fn study_polygons(cfg: &ConsistencyConfig) -> Result<Vec<Polygon>> {
    let params = RandomPolygonParams {
        min_vertices: cfg.min_vertices,
        max_vertices: cfg.max_vertices,
        mean_radius: cfg.radius_range.0,
        irregularity: cfg.irregularity,
    };
    random_polygons(cfg.seed, cfg.n_polygons, cfg.center_range, cfg.radius_range, &params)
}

fn timed<T>(f: impl FnOnce() -> Result<T>) -> Result<(T, f64)> {
    let t = Instant::now();
    let v = f()?;
    Ok((v, t.elapsed().as_secs_f64()))
}

pub fn consistency_study(cfg: &ConsistencyConfig) -> Result<ConsistencyReport> {
    if cfg.resolutions.is_empty() {
        return Err(FairError::param("no resolutions given"));
    }
    let polygons = study_polygons(cfg)?;
    let kernel = &cfg.kernel;
    let mut fair = Vec::new();
    let mut direct = Vec::new();
    let mut partial = Vec::new();
    for &res in &cfg.resolutions {
        let grid = RegularGrid::covering(cfg.domain.0, cfg.domain.1, res)?;
        let (kf, tf) = timed(|| {
            FairEngine::from_regions(&polygons, &grid, cfg.coverage)?.cov_matrix(kernel)
        })?;
        let ((kd, counts), td) = timed(|| {
            let q = QuadratureEngine::riemann(&polygons, &grid, None)?;
            Ok((q.cov_matrix(kernel)?, q.point_counts()))
        })?;
        partial.push((res, grid.dx(), tf, td, counts));
        fair.push(kf.matrix);
        direct.push(kd.matrix);
    }
    let top = (0..cfg.resolutions.len())
        .max_by_key(|&i| cfg.resolutions[i])
        .unwrap();
    let hr = &direct[top];
    let mut rows = Vec::new();
    for (k, (res, dx, tf, td, counts)) in partial.into_iter().enumerate() {
        let (f, d) = (&fair[k], &direct[k]);
        let others = k != top;
        rows.push(ConsistencyRow {
            resolution: res,
            delta_x: dx,
            rmsed: rmsed(f, d)?,
            maed: maed(f, d)?,
            kl: kl_div(f, d).ok(),
            time_fair: cfg.timing.then_some(tf),
            time_direct: cfg.timing.then_some(td),
            rmsed_fair_hr: rmsed(f, hr)?,
            rmsed_direct_hr: others.then(|| rmsed(d, hr)).transpose()?,
            maed_fair_hr: maed(f, hr)?,
            maed_direct_hr: others.then(|| maed(d, hr)).transpose()?,
            kl_fair_hr: kl_div(f, hr).ok(),
            kl_direct_hr: if others { kl_div(d, hr).ok() } else { None },
            min_points: counts.iter().copied().min().unwrap_or(0),
            max_points: counts.iter().copied().max().unwrap_or(0),
        });
    }
    Ok(ConsistencyReport {
        polygons,
        rows,
        fair,
        direct,
    })
}

fn sci(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| format!("{x:.6e}"))
}

fn secs(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| format!("{x:.3}"))
}

pub fn consistency_csv(cfg: &ConsistencyConfig, report: &ConsistencyReport) -> Result<String> {
    let mut out = header("consistency-study", cfg)?;
    out.push_str(
        "resolution,delta_x,rmsed,maed,kl,time_fair,time_direct,\
         rmsed_fair_hr,rmsed_direct_hr,maed_fair_hr,maed_direct_hr,kl_fair_hr,kl_direct_hr,\
         min_points,max_points\n",
    );
    for r in &report.rows {
        let _ = writeln!(
            out,
            "{},{:.6},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.resolution,
            r.delta_x,
            sci(Some(r.rmsed)),
            sci(Some(r.maed)),
            sci(r.kl),
            secs(r.time_fair),
            secs(r.time_direct),
            sci(Some(r.rmsed_fair_hr)),
            sci(r.rmsed_direct_hr),
            sci(Some(r.maed_fair_hr)),
            sci(r.maed_direct_hr),
            sci(r.kl_fair_hr),
            sci(r.kl_direct_hr),
            r.min_points,
            r.max_points,
        );
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn truth_column_matches_closed_form() {
        let cfg = AccuracyConfig {
            resolutions: vec![16],
            ..Default::default()
        };
        let rows = accuracy_study(&cfg).unwrap();
        let want = [0.926, 0.501, 0.147, 0.023, 0.002];
        for (r, w) in rows.iter().zip(want) {
            assert!((r.truth_corr - w).abs() < 5e-4, "{r:?}");
        }
        let csv = accuracy_csv(&cfg, &rows).unwrap();
        assert!(csv.starts_with("# fair accuracy-study\n# config: {"));
        assert_eq!(csv.lines().count(), 3 + 5);
    }

    #[test]
    fn truth_rescales_with_range() {
        let k = CovarianceKernel::gaussian(1.0, 2.0).unwrap();
        let a = Rectangle::new([0.0, 2.0], [0.0, 2.0]).unwrap();
        let b = Rectangle::new([0.6, 2.6], [0.6, 2.6]).unwrap();
        let unit = gaussian_rect_corr(&Rectangle::unit_square_at(0.0), &Rectangle::unit_square_at(0.3)).unwrap();
        assert!((gaussian_truth(&k, &a, &b).unwrap() - unit).abs() < 1e-14);
        let m = CovarianceKernel::matern(1.0, 1.0, 1.5).unwrap();
        assert!(gaussian_truth(&m, &a, &b).is_err());
    }

    #[test]
    fn small_consistency_study() {
        let cfg = ConsistencyConfig {
            n_polygons: 4,
            resolutions: vec![64, 128],
            timing: false,
            ..Default::default()
        };
        let rep = consistency_study(&cfg).unwrap();
        assert_eq!(rep.rows.len(), 2);
        assert!(rep.rows[1].rmsed_direct_hr.is_none());
        assert_eq!(rep.rows[1].maed_direct_hr, None);
        assert!(rep.rows[0].rmsed > 0.0);
        let a = consistency_csv(&cfg, &rep).unwrap();
        let b = consistency_csv(&cfg, &consistency_study(&cfg).unwrap()).unwrap();
        assert_eq!(a, b);
        assert!(a.contains(",NA,NA,"));
    }
}
