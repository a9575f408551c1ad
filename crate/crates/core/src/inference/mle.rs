use std::f64::consts::PI;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{FairError, Result};
use crate::fourier::{FairEngine, GridSpec, Method};
use crate::geometry::Coverage;
use crate::kernels::CovarianceKernel;
use crate::quadrature::QuadratureEngine;

use super::likelihood::{factor, log_det};
use super::pd::nearest_pd;

/// One (range, variance ratio) pair, `ratio = tau2 / sigma2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub theta: f64,
    pub ratio: f64,
}

/// Cartesian product, ranges outermost.
pub fn candidate_grid(thetas: &[f64], ratios: &[f64]) -> Vec<Candidate> {
    thetas
        .iter()
        .flat_map(|&theta| ratios.iter().map(move |&ratio| Candidate { theta, ratio }))
        .collect()
}

/// `n` evenly spaced values from `lo` to `hi`.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|k| if k == n - 1 { hi } else { lo + (hi - lo) * k as f64 / (n - 1) as f64 })
            .collect(),
    }
}

/// `n` log-evenly spaced values from `lo` to `hi`.
pub fn geomspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    linspace(lo.ln(), hi.ln(), n)
        .into_iter()
        .enumerate()
        .map(|(k, v)| match k {
            0 => lo,
            _ if k == n - 1 => hi,
            _ => v.exp(),
        })
        .collect()
}

pub const DEFAULT_RANGES: (f64, f64, usize) = (0.0625, 0.5, 9);
pub const DEFAULT_RATIOS: (f64, f64, usize) = (0.005, 2.0, 45);

/// 9 linearly spaced ranges in [0.0625, 0.5] times 45 log-spaced ratios in
/// [0.005, 2].
pub fn default_candidates() -> Vec<Candidate> {
    let (a, b, n) = DEFAULT_RANGES;
    let (c, d, m) = DEFAULT_RATIOS;
    candidate_grid(&linspace(a, b, n), &geomspace(c, d, m))
}

/// Source of unit-variance regional covariance matrices, with everything
/// that does not depend on the kernel computed up front.
#[derive(Debug, Clone)]
pub enum CovarianceBackend {
    Fair(FairEngine),
    Quadrature(QuadratureEngine),
}

impl CovarianceBackend {
    pub fn method(&self) -> Method {
        match self {
            CovarianceBackend::Fair(_) => Method::Fair,
            CovarianceBackend::Quadrature(q) => q.method(),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            CovarianceBackend::Fair(e) => e.len(),
            CovarianceBackend::Quadrature(q) => q.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Covariance matrix of `kernel` with its variance set to 1.
    pub fn unit_cov(&self, kernel: &CovarianceKernel) -> Result<DMatrix<f64>> {
        let unit = kernel.with_sigma2(1.0)?;
        match self {
            CovarianceBackend::Fair(e) => e.cov_from_spectrum(&e.spectrum(&unit)?),
            CovarianceBackend::Quadrature(q) => Ok(q.cov_matrix(&unit)?.matrix),
        }
    }
}

/// Outcome of one candidate. `nll` is `None` when the candidate failed even
/// after repair; `error` then says why.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateResult {
    pub theta: f64,
    pub ratio: f64,
    pub nll: Option<f64>,
    pub sigma2: Option<f64>,
    pub tau2: Option<f64>,
    pub repaired: bool,
    pub seconds: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BestFit {
    pub index: usize,
    pub theta: f64,
    pub ratio: f64,
    pub nll: f64,
    pub sigma2: f64,
    pub tau2: f64,
}

/// Wall-clock seconds per phase.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseTimings {
    pub setup: f64,
    pub precompute: f64,
    pub search: f64,
    pub total: f64,
}

/// Location and scale removed from the data before fitting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub mean: f64,
    pub sd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MleResult {
    pub method: Method,
    /// Fitted kernel: best range and profiled variance.
    pub kernel: CovarianceKernel,
    pub best: BestFit,
    pub n_regions: usize,
    pub candidates: Vec<CandidateResult>,
    /// Seconds spent building the unit covariance for each distinct range.
    pub range_seconds: Vec<(f64, f64)>,
    pub repaired_count: usize,
    pub timing: PhaseTimings,
    #[serde(default)]
    pub grid: Option<GridSpec>,
    #[serde(default)]
    pub resolution: usize,
    #[serde(default)]
    pub coverage: Option<Coverage>,
    #[serde(default)]
    pub normalization: Option<Normalization>,
    #[serde(default)]
    pub warnings: Vec<String>,
    /// Resolved configuration of the run that produced this result.
    #[serde(default)]
    pub config: Option<serde_json::Value>,
}

impl MleResult {
    /// NLL surface as `[range][ratio]` when the candidates form a full grid
    /// in row-major order.
    pub fn surface(&self) -> Vec<Vec<Option<f64>>> {
        let mut rows: Vec<Vec<Option<f64>>> = Vec::new();
        let mut last = None;
        for c in &self.candidates {
            if last != Some(c.theta) {
                rows.push(Vec::new());
                last = Some(c.theta);
            }
            rows.last_mut().unwrap().push(c.nll);
        }
        rows
    }
}

/// Profiled NLL for `A = K1 + ratio I`: with `sigma2 = r^T A^-1 r / n`,
/// `NLL = n/2 (1 + log sigma2 + log 2 pi) + 1/2 log|A|`.
pub fn profile_candidate(k1: &DMatrix<f64>, ratio: f64, r: &DVector<f64>) -> CandidateResult {
    let start = Instant::now();
    let mut out = CandidateResult {
        theta: f64::NAN,
        ratio,
        nll: None,
        sigma2: None,
        tau2: None,
        repaired: false,
        seconds: 0.0,
        error: None,
    };
    let n = r.len() as f64;
    let mut a = k1.clone();
    for i in 0..a.nrows() {
        a[(i, i)] += ratio;
    }
    let chol = match factor(a.clone(), "K1 + ratio I") {
        Ok(c) => Ok(c),
        Err(_) => {
            out.repaired = true;
            factor(nearest_pd(&a), "repaired K1 + ratio I")
        }
    };
    match chol {
        Ok(chol) => {
            let s2 = r.dot(&chol.solve(r)) / n;
            if s2 > 0.0 && s2.is_finite() {
                out.nll = Some(0.5 * n * (1.0 + s2.ln() + (2.0 * PI).ln()) + 0.5 * log_det(&chol));
                out.sigma2 = Some(s2);
                out.tau2 = Some(ratio * s2);
            } else {
                out.error = Some(format!("profiled variance {s2}"));
            }
        }
        Err(e) => out.error = Some(e.to_string()),
    }
    out.seconds = start.elapsed().as_secs_f64();
    out
}

fn unique_thetas(candidates: &[Candidate]) -> Vec<f64> {
    let mut seen: Vec<f64> = Vec::new();
    for c in candidates {
        if !seen.contains(&c.theta) {
            seen.push(c.theta);
        }
    }
    seen
}

fn validate(candidates: &[Candidate], r: &[f64]) -> Result<()> {
    if candidates.is_empty() {
        return Err(FairError::param("candidate list is empty"));
    }
    if let Some(c) = candidates
        .iter()
        .find(|c| !(c.theta > 0.0 && c.theta.is_finite() && c.ratio >= 0.0 && c.ratio.is_finite()))
    {
        return Err(FairError::param(format!("invalid candidate {c:?}")));
    }
    if r.iter().all(|&v| v == 0.0) {
        return Err(FairError::param("residual vector is identically zero"));
    }
    Ok(())
}

/// Scores every candidate against precomputed unit covariances, one per
/// distinct range, and returns the results with the index of the minimum.
pub fn search_surface(
    unit_covs: &[(f64, DMatrix<f64>)],
    candidates: &[Candidate],
    r: &[f64],
) -> Result<(Vec<CandidateResult>, BestFit)> {
    validate(candidates, r)?;
    let rv = DVector::from_column_slice(r);
    let results: Vec<CandidateResult> = candidates
        .par_iter()
        .map(|c| {
            let k1 = unit_covs
                .iter()
                .find(|(t, _)| *t == c.theta)
                .map(|(_, k)| k)
                .ok_or_else(|| FairError::param(format!("no covariance for range {}", c.theta)))?;
            if k1.nrows() != r.len() {
                return Err(FairError::mismatch(k1.nrows(), r.len()));
            }
            let mut out = profile_candidate(k1, c.ratio, &rv);
            out.theta = c.theta;
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let mut best: Option<BestFit> = None;
    for (index, c) in results.iter().enumerate() {
        if let (Some(nll), Some(sigma2), Some(tau2)) = (c.nll, c.sigma2, c.tau2) {
            if best.map_or(true, |b| nll < b.nll) {
                best = Some(BestFit {
                    index,
                    theta: c.theta,
                    ratio: c.ratio,
                    nll,
                    sigma2,
                    tau2,
                });
            }
        }
    }
    match best {
        Some(b) => Ok((results, b)),
        None => Err(FairError::AllCandidatesFailed {
            count: results.len(),
            diagnostics: results
                .iter()
                .map(|c| {
                    format!(
                        "(theta {}, ratio {}): {}",
                        c.theta,
                        c.ratio,
                        c.error.as_deref().unwrap_or("?")
                    )
                })
                .collect::<Vec<_>>()
                .join("; "),
        }),
    }
}

/// Grid search over (range, ratio) with the variance profiled out. `kernel`
/// fixes the family and smoothness; its range and variance are ignored.
pub fn mle_grid_search(
    backend: &CovarianceBackend,
    kernel: &CovarianceKernel,
    candidates: &[Candidate],
    residual: &[f64],
) -> Result<MleResult> {
    validate(candidates, residual)?;
    if residual.len() != backend.len() {
        return Err(FairError::mismatch(
            format!("{} residuals", backend.len()),
            residual.len(),
        ));
    }
    let start = Instant::now();
    let mut unit_covs = Vec::new();
    let mut range_seconds = Vec::new();
    for theta in unique_thetas(candidates) {
        let t = Instant::now();
        let k1 = backend.unit_cov(&kernel.with_theta(theta)?)?;
        range_seconds.push((theta, t.elapsed().as_secs_f64()));
        unit_covs.push((theta, k1));
    }
    let (results, best) = search_surface(&unit_covs, candidates, residual)?;
    let search = start.elapsed().as_secs_f64();
    let repaired_count = results.iter().filter(|c| c.repaired).count();
    let mut warnings = Vec::new();
    if residual.len() < 3 {
        warnings.push(format!(
            "only {} observations for a two-parameter search",
            residual.len()
        ));
    }
    if repaired_count > 0 {
        warnings.push(format!("{repaired_count} candidates needed positive definite repair"));
    }
    Ok(MleResult {
        method: backend.method(),
        kernel: kernel.with_theta(best.theta)?.with_sigma2(best.sigma2)?,
        best,
        n_regions: residual.len(),
        candidates: results,
        range_seconds,
        repaired_count,
        timing: PhaseTimings {
            search,
            total: search,
            ..Default::default()
        },
        grid: None,
        resolution: 0,
        coverage: None,
        normalization: None,
        warnings,
        config: None,
    })
}
