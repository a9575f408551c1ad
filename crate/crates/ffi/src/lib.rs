//! C interface. Every function returns a [`FairStatus`]; on failure the
//! message is available from [`fair_last_error`] on the same thread.
//! Matrices are dense, row-major `n * n` arrays of doubles.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use fair::fourier::{build_grid_padded, KernelSpectrum};
use fair::geometry::Coverage;
use fair::inference::{kl_div, kriging_weights, maed, nearest_pd, neg_log_lik, rmsed, ObservationSet};
use fair::quadrature::QuadratureEngine;
use fair::{CovMatrix, CovarianceKernel, FairEngine as Engine, FairError, Polygon, RegularGrid};
use nalgebra::DMatrix;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FairStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    NotPositiveDefinite = 4,
    Numerical = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FairKernelFamily {
    Gaussian = 0,
    Matern = 1,
    Exponential = 2,
}

/// `nu` is read for Matérn only.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct FairKernel {
    pub family: FairKernelFamily,
    pub sigma2: f64,
    pub theta: f64,
    pub nu: f64,
}

/// Cell `(i, j)` has its lower-left corner at
/// `(origin_x + i dx, origin_y + j dy)`; flat index `i * ny + j`.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct FairGrid {
    pub origin_x: f64,
    pub origin_y: f64,
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    pub dy: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct FairMetrics {
    pub rmsed: f64,
    pub maed: f64,
    /// NaN when either matrix is not positive definite.
    pub kl: f64,
}

/// Opaque list of polygons.
pub struct FairRegions {
    polygons: Vec<Polygon>,
}

/// Opaque FAIR engine: grid, transformed indicators and, once set, a kernel.
pub struct FairEngine {
    engine: Engine,
    spectrum: Option<(CovarianceKernel, KernelSpectrum)>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(FairStatus, String);

impl From<FairError> for Failure {
    fn from(e: FairError) -> Self {
        let status = match &e {
            FairError::NotPositiveDefinite { .. } => FairStatus::NotPositiveDefinite,
            FairError::DimensionMismatch { .. } => FairStatus::DimensionMismatch,
            _ if e.is_numerical() => FairStatus::Numerical,
            _ => FairStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(FairStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> FairStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            FairStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal error: {msg}"));
            FairStatus::Panic
        }
    }
}

unsafe fn input<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn output<'a, T>(p: *mut T, len: usize, want: usize, what: &str) -> Result<&'a mut [T], Failure> {
    if len != want {
        return Err(Failure(
            FairStatus::DimensionMismatch,
            format!("{what} holds {len} values, expected {want}"),
        ));
    }
    if want == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts_mut(p, len))
}

unsafe fn read_kernel(k: *const FairKernel) -> Result<CovarianceKernel, Failure> {
    let k = k.as_ref().ok_or_else(|| null("kernel"))?;
    let out = match k.family {
        FairKernelFamily::Gaussian => CovarianceKernel::gaussian(k.sigma2, k.theta),
        FairKernelFamily::Matern => CovarianceKernel::matern(k.sigma2, k.theta, k.nu),
        FairKernelFamily::Exponential => CovarianceKernel::exponential(k.sigma2, k.theta),
    }?;
    Ok(out)
}

fn square(values: &[f64], n: usize) -> DMatrix<f64> {
    DMatrix::from_row_slice(n, n, values)
}

fn write_square(m: &DMatrix<f64>, out: &mut [f64]) {
    let n = m.nrows();
    for i in 0..n {
        for j in 0..n {
            out[i * n + j] = m[(i, j)];
        }
    }
}

fn coverage(supersample: u32) -> Coverage {
    match supersample {
        0 => Coverage::Exact,
        n => Coverage::Supersample(n as usize),
    }
}

/// Message of the last failed call on this thread, or NULL. Valid until the
/// next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn fair_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

#[no_mangle]
pub extern "C" fn fair_regions_new() -> *mut FairRegions {
    Box::into_raw(Box::new(FairRegions { polygons: Vec::new() }))
}

/// Appends a polygon given as `n_vertices` interleaved `x, y` pairs.
///
/// # Safety
/// `regions` must come from [`fair_regions_new`]; `xy` must hold
/// `2 * n_vertices` doubles.
#[no_mangle]
pub unsafe extern "C" fn fair_regions_add(
    regions: *mut FairRegions,
    xy: *const f64,
    n_vertices: usize,
) -> FairStatus {
    guard(|| {
        let r = regions.as_mut().ok_or_else(|| null("regions"))?;
        let coords = input(xy, 2 * n_vertices, "vertices")?;
        let poly = Polygon::new(coords.chunks_exact(2).map(|c| [c[0], c[1]]).collect())?;
        r.polygons.push(poly);
        Ok(())
    })
}

/// # Safety
/// `regions` must be null or come from [`fair_regions_new`].
#[no_mangle]
pub unsafe extern "C" fn fair_regions_len(regions: *const FairRegions) -> usize {
    regions.as_ref().map_or(0, |r| r.polygons.len())
}

/// # Safety
/// `regions` must be null or come from [`fair_regions_new`], and not be
/// used afterwards.
#[no_mangle]
pub unsafe extern "C" fn fair_regions_free(regions: *mut FairRegions) {
    if !regions.is_null() {
        drop(Box::from_raw(regions));
    }
}

/// Builds the FAIR grid for `sizing_kernel` at `resolution` cells per axis,
/// widened by `padding`, and transforms every region. `supersample` 0 means
/// exact cell coverage.
///
/// # Safety
/// Pointers must be valid; `*out` receives a handle for [`fair_engine_free`].
#[no_mangle]
pub unsafe extern "C" fn fair_engine_new(
    regions: *const FairRegions,
    sizing_kernel: *const FairKernel,
    resolution: usize,
    padding: f64,
    supersample: u32,
    out: *mut *mut FairEngine,
) -> FairStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = ptr::null_mut();
        let r = regions.as_ref().ok_or_else(|| null("regions"))?;
        let k = read_kernel(sizing_kernel)?;
        let grid = build_grid_padded(&r.polygons, &k, resolution, padding)?;
        let engine = Engine::from_regions(&r.polygons, &grid, coverage(supersample))?;
        *out = Box::into_raw(Box::new(FairEngine {
            engine,
            spectrum: None,
        }));
        Ok(())
    })
}

/// # Safety
/// `engine` must come from [`fair_engine_new`]; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fair_engine_grid(engine: *const FairEngine, out: *mut FairGrid) -> FairStatus {
    guard(|| {
        let e = engine.as_ref().ok_or_else(|| null("engine"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let g: &RegularGrid = e.engine.grid();
        let [origin_x, origin_y] = g.origin();
        *out = FairGrid {
            origin_x,
            origin_y,
            nx: g.nx(),
            ny: g.ny(),
            dx: g.dx(),
            dy: g.dy(),
        };
        Ok(())
    })
}

/// # Safety
/// `engine` must be null or come from [`fair_engine_new`], and not be used
/// afterwards.
#[no_mangle]
pub unsafe extern "C" fn fair_engine_free(engine: *mut FairEngine) {
    if !engine.is_null() {
        drop(Box::from_raw(engine));
    }
}

impl FairEngine {
    fn with_kernel(&mut self, k: CovarianceKernel) -> Result<(&Engine, &KernelSpectrum), Failure> {
        if self.spectrum.as_ref().map_or(true, |(old, _)| *old != k) {
            let s = self.engine.spectrum(&k)?;
            self.spectrum = Some((k, s));
        }
        Ok((&self.engine, &self.spectrum.as_ref().unwrap().1))
    }
}

/// Regional covariance matrix into `out` (`len == n * n`).
///
/// # Safety
/// Pointers must be valid; `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn fair_engine_cov_matrix(
    engine: *mut FairEngine,
    kernel: *const FairKernel,
    out: *mut f64,
    len: usize,
) -> FairStatus {
    guard(|| {
        let e = engine.as_mut().ok_or_else(|| null("engine"))?;
        let k = read_kernel(kernel)?;
        let n = e.engine.len();
        let out = output(out, len, n * n, "out")?;
        let (engine, spec) = e.with_kernel(k)?;
        let m = engine.cov_from_spectrum(spec)?;
        write_square(&m, out);
        Ok(())
    })
}

/// Kriging surface for weights `beta` on the engine grid, zero mean; `out`
/// holds `nx * ny` values in grid order.
///
/// # Safety
/// Pointers must be valid; `beta` holds `n_beta` doubles, `out` holds `len`.
#[no_mangle]
pub unsafe extern "C" fn fair_engine_predict(
    engine: *mut FairEngine,
    kernel: *const FairKernel,
    beta: *const f64,
    n_beta: usize,
    out: *mut f64,
    len: usize,
) -> FairStatus {
    guard(|| {
        let e = engine.as_mut().ok_or_else(|| null("engine"))?;
        let k = read_kernel(kernel)?;
        let beta = input(beta, n_beta, "beta")?;
        let total = e.engine.grid().len();
        let out = output(out, len, total, "out")?;
        let (engine, spec) = e.with_kernel(k)?;
        let surface = engine.predict_surface(spec, beta, None)?;
        out.copy_from_slice(&surface);
        Ok(())
    })
}

/// Direct (Riemann) covariance matrix on the same grid FAIR would use.
///
/// # Safety
/// Pointers must be valid; `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn fair_direct_cov_matrix(
    regions: *const FairRegions,
    kernel: *const FairKernel,
    resolution: usize,
    padding: f64,
    out: *mut f64,
    len: usize,
) -> FairStatus {
    guard(|| {
        let r = regions.as_ref().ok_or_else(|| null("regions"))?;
        let k = read_kernel(kernel)?;
        let n = r.polygons.len();
        let out = output(out, len, n * n, "out")?;
        let grid = build_grid_padded(&r.polygons, &k, resolution, padding)?;
        let m = QuadratureEngine::riemann(&r.polygons, &grid, None)?.cov_matrix(&k)?;
        write_square(&m.matrix, out);
        Ok(())
    })
}

unsafe fn observations(
    k: *const f64,
    n: usize,
    z: *const f64,
    mu: *const f64,
    tau2: f64,
) -> Result<(CovMatrix, ObservationSet), Failure> {
    let kv = input(k, n * n, "k")?;
    let z = input(z, n, "z")?.to_vec();
    let mu = if mu.is_null() {
        vec![0.0; n]
    } else {
        input(mu, n, "mu")?.to_vec()
    };
    let cov = CovMatrix::new(square(kv, n), fair::fourier::Method::Fair, 0, None)?;
    Ok((cov, ObservationSet::unlabeled(z, mu, tau2)?))
}

/// Gaussian negative log-likelihood of `z` under mean `mu` (NULL for zero)
/// and covariance `K + tau2 I`.
///
/// # Safety
/// `k` holds `n * n` doubles, `z` and a non-null `mu` hold `n`.
#[no_mangle]
pub unsafe extern "C" fn fair_neg_log_lik(
    k: *const f64,
    n: usize,
    z: *const f64,
    mu: *const f64,
    tau2: f64,
    out: *mut f64,
) -> FairStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let (cov, obs) = observations(k, n, z, mu, tau2)?;
        *out = neg_log_lik(&cov, &obs)?;
        Ok(())
    })
}

/// Solves `(K + tau2 I) beta = z - mu` into `beta` (`n` doubles).
///
/// # Safety
/// As [`fair_neg_log_lik`]; `beta` holds `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn fair_kriging_weights(
    k: *const f64,
    n: usize,
    z: *const f64,
    mu: *const f64,
    tau2: f64,
    beta: *mut f64,
) -> FairStatus {
    guard(|| {
        let out = output(beta, n, n, "beta")?;
        let (cov, obs) = observations(k, n, z, mu, tau2)?;
        out.copy_from_slice(&kriging_weights(&cov, &obs)?);
        Ok(())
    })
}

/// Nearest positive definite matrix by eigenvalue clipping.
///
/// # Safety
/// `k` and `out` hold `n * n` doubles; they may alias.
#[no_mangle]
pub unsafe extern "C" fn fair_nearest_pd(k: *const f64, n: usize, out: *mut f64) -> FairStatus {
    guard(|| {
        let m = square(input(k, n * n, "k")?, n);
        let out = output(out, n * n, n * n, "out")?;
        write_square(&nearest_pd(&m), out);
        Ok(())
    })
}

/// Differences between two `n x n` covariance matrices.
///
/// # Safety
/// `a` and `b` hold `n * n` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fair_metrics(
    a: *const f64,
    b: *const f64,
    n: usize,
    out: *mut FairMetrics,
) -> FairStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let a = square(input(a, n * n, "a")?, n);
        let b = square(input(b, n * n, "b")?, n);
        *out = FairMetrics {
            rmsed: rmsed(&a, &b)?,
            maed: maed(&a, &b)?,
            kl: kl_div(&a, &b).unwrap_or(f64::NAN),
        };
        Ok(())
    })
}
