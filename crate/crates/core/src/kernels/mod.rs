//! Stationary isotropic covariance kernels and the closed-form Gaussian
//! rectangle integral used as ground truth.

mod bessel;
mod rect;

pub use bessel::{bessel_k, bessel_k_scaled};
pub use rect::{gaussian_rect_corr, gaussian_rect_cov, int_std_normal_cdf, Rectangle};

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{FairError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelFamily {
    Gaussian,
    Matern,
    Exponential,
}

/// Covariance `c(h)` with marginal variance `sigma2`, range `theta` and,
/// for Matérn, smoothness `nu`.
///
/// * gaussian: `sigma2 * exp(-d^2 / (2 theta^2))`
/// * matern: `sigma2 * 2^(1-nu) / Gamma(nu) * (d/theta)^nu * K_nu(d/theta)`
/// * exponential: `sigma2 * exp(-d / theta)`
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "KernelSpec", into = "KernelSpec")]
pub struct CovarianceKernel {
    family: KernelFamily,
    sigma2: f64,
    theta: f64,
    nu: f64,
}

/// Wire form: `{"family": "matern", "sigma2": 1.0, "theta": 0.5, "nu": 1.5}`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSpec {
    pub family: KernelFamily,
    #[serde(default = "one")]
    pub sigma2: f64,
    pub theta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu: Option<f64>,
}

fn one() -> f64 {
    1.0
}

impl TryFrom<KernelSpec> for CovarianceKernel {
    type Error = FairError;

    fn try_from(s: KernelSpec) -> Result<Self> {
        match s.family {
            KernelFamily::Matern => {
                let nu = s
                    .nu
                    .ok_or_else(|| FairError::param("matern kernel requires nu"))?;
                CovarianceKernel::matern(s.sigma2, s.theta, nu)
            }
            KernelFamily::Gaussian => CovarianceKernel::gaussian(s.sigma2, s.theta),
            KernelFamily::Exponential => CovarianceKernel::exponential(s.sigma2, s.theta),
        }
    }
}

impl From<CovarianceKernel> for KernelSpec {
    fn from(k: CovarianceKernel) -> Self {
        KernelSpec {
            family: k.family,
            sigma2: k.sigma2,
            theta: k.theta,
            nu: (k.family == KernelFamily::Matern).then_some(k.nu),
        }
    }
}

impl CovarianceKernel {
    fn checked(family: KernelFamily, sigma2: f64, theta: f64, nu: f64) -> Result<Self> {
        if !(sigma2 >= 0.0 && sigma2.is_finite()) {
            return Err(FairError::param(format!("sigma2 must be >= 0, got {sigma2}")));
        }
        if !(theta > 0.0 && theta.is_finite()) {
            return Err(FairError::param(format!("theta must be > 0, got {theta}")));
        }
        if !(nu > 0.0 && nu.is_finite()) {
            return Err(FairError::param(format!("nu must be > 0, got {nu}")));
        }
        Ok(CovarianceKernel {
            family,
            sigma2,
            theta,
            nu,
        })
    }

    pub fn gaussian(sigma2: f64, theta: f64) -> Result<Self> {
        Self::checked(KernelFamily::Gaussian, sigma2, theta, 1.0)
    }

    pub fn matern(sigma2: f64, theta: f64, nu: f64) -> Result<Self> {
        Self::checked(KernelFamily::Matern, sigma2, theta, nu)
    }

    pub fn exponential(sigma2: f64, theta: f64) -> Result<Self> {
        Self::checked(KernelFamily::Exponential, sigma2, theta, 0.5)
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Smoothness; meaningful for Matérn only.
    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn with_sigma2(&self, sigma2: f64) -> Result<Self> {
        Self::checked(self.family, sigma2, self.theta, self.nu)
    }

    pub fn with_theta(&self, theta: f64) -> Result<Self> {
        Self::checked(self.family, self.sigma2, theta, self.nu)
    }

    /// Covariance at lag vector `h`.
    pub fn eval(&self, h: [f64; 2]) -> f64 {
        self.eval_dist(h[0].hypot(h[1]))
    }

    /// Covariance at distance `d >= 0`.
    #[inline]
    pub fn eval_dist(&self, d: f64) -> f64 {
        self.sigma2 * self.correlation(d)
    }

    /// Correlation `c(d) / sigma2`.
    #[inline]
    pub fn correlation(&self, d: f64) -> f64 {
        if d == 0.0 {
            return 1.0;
        }
        let u = d / self.theta;
        match self.family {
            KernelFamily::Gaussian => (-0.5 * u * u).exp(),
            KernelFamily::Exponential => (-u).exp(),
            KernelFamily::Matern => {
                if self.nu == 0.5 {
                    (-u).exp()
                } else if self.nu == 1.5 {
                    (1.0 + u) * (-u).exp()
                } else if self.nu == 2.5 {
                    (1.0 + u + u * u / 3.0) * (-u).exp()
                } else {
                    matern_correlation_bessel(self.nu, u)
                }
            }
        }
    }

    /// Distance at which the correlation falls to `x`, for `0 < x < 1`.
    pub fn correlation_range(&self, x: f64) -> Result<f64> {
        if !(x > 0.0 && x < 1.0) {
            return Err(FairError::param(format!(
                "correlation level must lie in (0, 1), got {x}"
            )));
        }
        let theta = self.theta;
        match self.family {
            KernelFamily::Gaussian => Ok(theta * (2.0 * (1.0 / x).ln()).sqrt()),
            KernelFamily::Exponential => Ok(theta * (1.0 / x).ln()),
            KernelFamily::Matern => {
                let mut hi = 50.0 * theta;
                while self.correlation(hi) > x {
                    hi *= 2.0;
                }
                let mut lo = 0.0;
                while hi - lo > 1e-10 * hi {
                    let mid = 0.5 * (lo + hi);
                    if self.correlation(mid) > x {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                Ok(0.5 * (lo + hi))
            }
        }
    }
}

/// Matérn correlation at scaled distance `u = d / theta` through the general
/// Bessel form, valid for any smoothness.
pub fn matern_correlation_bessel(nu: f64, u: f64) -> f64 {
    if u == 0.0 {
        return 1.0;
    }
    if u < 1e-12 {
        // u^nu K_nu(u) -> Gamma(nu) 2^(nu-1)
        return 1.0;
    }
    let log_c = (1.0 - nu) * std::f64::consts::LN_2 - ln_gamma(nu) + nu * u.ln()
        + bessel_k_scaled(nu, u).ln()
        - u;
    log_c.exp().min(1.0)
}

/// Free-function form of [`CovarianceKernel::eval`].
pub fn eval_kernel(k: &CovarianceKernel, h: [f64; 2]) -> f64 {
    k.eval(h)
}

/// Free-function form of [`CovarianceKernel::correlation_range`].
pub fn correlation_range(k: &CovarianceKernel, x: f64) -> Result<f64> {
    k.correlation_range(x)
}
