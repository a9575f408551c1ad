//! Covariance computation, estimation and prediction on a regions file.

use std::time::Instant;

use crate::error::{FairError, Result};
use crate::fourier::{build_grid, build_grid_padded, CovMatrix, FairEngine, Method, RegularGrid};
use crate::geometry::{Polygon, Region};
use crate::inference::{
    candidate_grid, kriging_weights, mle_grid_search, CovarianceBackend, MleResult, Normalization,
    ObservationSet,
};
use crate::kernels::CovarianceKernel;
use crate::quadrature::QuadratureEngine;

use super::config::{ComputeCovConfig, EstimateConfig};
use super::io::CovSidecar;

fn split(regions: &[Region]) -> (Vec<String>, Vec<Polygon>) {
    regions
        .iter()
        .map(|r| (r.id.clone(), r.vertices.clone()))
        .unzip()
}

/// Values of every region, or an error listing those without one.
pub fn region_values(regions: &[Region]) -> Result<Vec<f64>> {
    let missing: Vec<&str> = regions
        .iter()
        .filter(|r| r.value.is_none())
        .map(|r| r.id.as_str())
        .collect();
    if !missing.is_empty() {
        return Err(FairError::param(format!(
            "regions without a value: {}",
            missing.join(", ")
        )));
    }
    Ok(regions.iter().filter_map(|r| r.value).collect())
}

pub fn compute_cov(regions: &[Region], cfg: &ComputeCovConfig) -> Result<(CovMatrix, CovSidecar)> {
    let start = Instant::now();
    let (ids, polys) = split(regions);
    let (cov, grid, counts) = match cfg.method {
        Method::Fair => {
            let grid = build_grid_padded(&polys, &cfg.kernel, cfg.resolution, cfg.padding)?;
            let cov = FairEngine::from_regions(&polys, &grid, cfg.coverage)?.cov_matrix(&cfg.kernel)?;
            (cov, Some(grid), None)
        }
        Method::Riemann => {
            let grid = build_grid_padded(&polys, &cfg.kernel, cfg.resolution, cfg.padding)?;
            let q = QuadratureEngine::riemann(&polys, &grid, Some(&ids))?;
            (q.cov_matrix(&cfg.kernel)?, Some(grid), Some(q.point_counts()))
        }
        Method::Jh => {
            let q = QuadratureEngine::jh(&polys, cfg.density, Some(&ids))?;
            (q.cov_matrix(&cfg.kernel)?, None, Some(q.point_counts()))
        }
    };
    let sidecar = CovSidecar {
        method: cov.method,
        resolution: cov.resolution,
        kernel: cov.kernel,
        ids,
        grid: grid.map(Into::into),
        point_counts: counts,
        seconds: (start.elapsed().as_secs_f64() * 1e3).round() / 1e3,
    };
    Ok((cov, sidecar))
}

/// Grid shared by estimation and prediction, sized for the largest
/// candidate range.
pub fn estimation_grid(
    polys: &[Polygon],
    kernel: &CovarianceKernel,
    max_theta: f64,
    resolution: usize,
) -> Result<RegularGrid> {
    build_grid(polys, &kernel.with_theta(max_theta)?, resolution)
}

fn round3(x: f64) -> f64 {
    (x * 1e3).round() / 1e3
}

/// Normalizes the region values, then runs the grid search.
pub fn estimate(regions: &[Region], cfg: &EstimateConfig) -> Result<MleResult> {
    let start = Instant::now();
    let (ids, polys) = split(regions);
    let values = region_values(regions)?;
    let n = values.len();
    if n < 2 {
        return Err(FairError::param(format!(
            "estimation needs at least two regions, got {n}"
        )));
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let sd = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
    if !(sd > 0.0) {
        return Err(FairError::param("region values have zero spread"));
    }
    let r: Vec<f64> = values.iter().map(|v| (v - mean) / sd).collect();
    let thetas = cfg.ranges.values();
    let candidates = candidate_grid(&thetas, &cfg.ratios.values());
    let max_theta = thetas.iter().copied().fold(f64::NAN, f64::max);
    if !(max_theta > 0.0) {
        return Err(FairError::param("range candidates must be positive"));
    }
    let grid = estimation_grid(&polys, &cfg.kernel, max_theta, cfg.resolution)?;
    let setup = start.elapsed().as_secs_f64();

    let t = Instant::now();
    let backend = match cfg.method {
        Method::Fair => CovarianceBackend::Fair(FairEngine::from_regions(&polys, &grid, cfg.coverage)?),
        Method::Riemann => {
            CovarianceBackend::Quadrature(QuadratureEngine::riemann(&polys, &grid, Some(&ids))?)
        }
        Method::Jh => return Err(FairError::param("estimation supports fair and riemann")),
    };
    let precompute = t.elapsed().as_secs_f64();

    let mut result = mle_grid_search(&backend, &cfg.kernel, &candidates, &r)?;
    result.timing.setup = round3(setup);
    result.timing.precompute = round3(precompute);
    result.timing.search = round3(result.timing.search);
    result.timing.total = round3(start.elapsed().as_secs_f64());
    for c in &mut result.candidates {
        c.seconds = round3(c.seconds);
    }
    for (_, s) in &mut result.range_seconds {
        *s = round3(*s);
    }
    result.grid = Some(grid.into());
    result.resolution = grid.nx();
    result.coverage = Some(cfg.coverage);
    result.normalization = Some(Normalization { mean, sd });
    result.config = Some(serde_json::to_value(cfg)?);
    Ok(result)
}

#[derive(Debug, Clone)]
pub struct Prediction {
    pub grid: RegularGrid,
    pub values: Vec<f64>,
    pub setup_seconds: f64,
    pub predict_seconds: f64,
}

/// Kriging surface on the grid recorded in `mle`, back on the data scale.
pub fn predict(regions: &[Region], mle: &MleResult, resolution: Option<usize>) -> Result<Prediction> {
    let start = Instant::now();
    let (ids, polys) = split(regions);
    let grid = RegularGrid::try_from(
        mle.grid
            .ok_or_else(|| FairError::param("estimation result carries no grid"))?,
    )?;
    if let Some(res) = resolution {
        if res != grid.nx() {
            return Err(FairError::mismatch(
                format!("resolution {} from the estimation result", grid.nx()),
                res,
            ));
        }
    }
    let max_theta = mle.candidates.iter().map(|c| c.theta).fold(f64::NAN, f64::max);
    let rebuilt = estimation_grid(&polys, &mle.kernel, max_theta, grid.nx())?;
    if rebuilt != grid {
        return Err(FairError::mismatch(
            format!("grid {:?} from the estimation result", grid),
            format!("{rebuilt:?} for these regions"),
        ));
    }
    let norm = mle.normalization.unwrap_or(Normalization { mean: 0.0, sd: 1.0 });
    let z: Vec<f64> = region_values(regions)?
        .iter()
        .map(|v| (v - norm.mean) / norm.sd)
        .collect();
    let engine = FairEngine::from_regions(&polys, &grid, mle.coverage.unwrap_or_default())?;
    let spec = engine.spectrum(&mle.kernel)?;
    let cov = CovMatrix::new(engine.cov_from_spectrum(&spec)?, Method::Fair, grid.nx(), Some(mle.kernel))?;
    let obs = ObservationSet::new(ids, z, vec![0.0; polys.len()], mle.best.tau2)?;
    let setup_seconds = start.elapsed().as_secs_f64();

    let t = Instant::now();
    let beta = kriging_weights(&cov, &obs)?;
    let surface = engine.predict_surface(&spec, &beta, None)?;
    let values = surface.iter().map(|v| norm.mean + norm.sd * v).collect();
    Ok(Prediction {
        grid,
        values,
        setup_seconds,
        predict_seconds: t.elapsed().as_secs_f64(),
    })
}
