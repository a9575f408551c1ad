use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};
use libm::erfc;

use crate::error::{FairError, Result};

/// Axis-aligned rectangle `[x0, x1] x [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rectangle {
    pub x: [f64; 2],
    pub y: [f64; 2],
}

impl Rectangle {
    pub fn new(x: [f64; 2], y: [f64; 2]) -> Result<Self> {
        if !(x[0] < x[1] && y[0] < y[1]) {
            return Err(FairError::param(format!(
                "degenerate rectangle {x:?} x {y:?}"
            )));
        }
        Ok(Rectangle { x, y })
    }

    /// Unit square shifted diagonally by `offset`.
    pub fn unit_square_at(offset: f64) -> Self {
        Rectangle {
            x: [offset, 1.0 + offset],
            y: [offset, 1.0 + offset],
        }
    }

    pub fn area(&self) -> f64 {
        (self.x[1] - self.x[0]) * (self.y[1] - self.y[0])
    }

    pub fn vertices(&self) -> Vec<[f64; 2]> {
        vec![
            [self.x[0], self.y[0]],
            [self.x[1], self.y[0]],
            [self.x[1], self.y[1]],
            [self.x[0], self.y[1]],
        ]
    }
}

fn std_normal_cdf(w: f64) -> f64 {
    0.5 * erfc(-w / SQRT_2)
}

fn std_normal_pdf(w: f64) -> f64 {
    (-0.5 * w * w).exp() / (2.0 * PI).sqrt()
}

/// `int_a^b Phi(w) dw` via the antiderivative `w Phi(w) + phi(w)`.
pub fn int_std_normal_cdf(a: f64, b: f64) -> f64 {
    let antideriv = |w: f64| w * std_normal_cdf(w) + std_normal_pdf(w);
    antideriv(b) - antideriv(a)
}

// int_{a0}^{a1} int_{b0}^{b1} phi(u - v) dv du
fn axis_factor(a: [f64; 2], b: [f64; 2]) -> f64 {
    -int_std_normal_cdf(b[1] - a[0], b[1] - a[1]) + int_std_normal_cdf(b[0] - a[0], b[0] - a[1])
}

/// `int_A int_B exp(-|u - v|^2 / 2) dv du` in closed form.
///
/// The kernel separates into per-axis Gaussian densities; each axis factor is
/// a signed pair of `Phi` integrals and the `2 pi` restores the density
/// normalization.
pub fn gaussian_rect_cov(a: &Rectangle, b: &Rectangle) -> Result<f64> {
    Rectangle::new(a.x, a.y)?;
    Rectangle::new(b.x, b.y)?;
    Ok(2.0 * PI * axis_factor(a.x, b.x) * axis_factor(a.y, b.y))
}

/// Correlation between the block averages over `a` and `b`.
pub fn gaussian_rect_corr(a: &Rectangle, b: &Rectangle) -> Result<f64> {
    let ab = gaussian_rect_cov(a, b)?;
    let aa = gaussian_rect_cov(a, a)?;
    let bb = gaussian_rect_cov(b, b)?;
    Ok(ab / (aa * bb).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    // Simpson's rule on Phi, independent of the antiderivative.
    fn simpson_phi(a: f64, b: f64) -> f64 {
        let n = 2000;
        let h = (b - a) / n as f64;
        let mut s = std_normal_cdf(a) + std_normal_cdf(b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * std_normal_cdf(a + i as f64 * h);
        }
        s * h / 3.0
    }

    #[test]
    fn phi_integral() {
        assert_eq!(int_std_normal_cdf(0.0, 0.0), 0.0);
        assert!((int_std_normal_cdf(-1.0, 1.0) - 1.0).abs() < 1e-15);
        let v = int_std_normal_cdf(0.0, 2.0);
        assert!((v - simpson_phi(0.0, 2.0)).abs() < 1e-12);
        assert!((v - 1.609_548_422_215_397).abs() < 1e-14);
        assert!((int_std_normal_cdf(-3.0, 0.7) - simpson_phi(-3.0, 0.7)).abs() < 1e-12);
    }

    #[test]
    fn self_correlation_is_one() {
        let a = Rectangle::unit_square_at(0.0);
        assert!((gaussian_rect_corr(&a, &a).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn ground_truth_correlations() {
        let a = Rectangle::unit_square_at(0.0);
        let table = [(0.3, 0.926), (0.9, 0.501), (1.5, 0.147), (2.1, 0.023), (2.7, 0.002)];
        for (delta, want) in table {
            let c = gaussian_rect_corr(&a, &Rectangle::unit_square_at(delta)).unwrap();
            assert!((c - want).abs() <= 5e-4, "delta={delta}: {c}");
        }
    }

    #[test]
    fn matches_tensor_riemann_sum() {
        // The kernel separates, so the 2^11 x 2^11 tensor midpoint sum over
        // each rectangle factorizes into per-axis double sums.
        let n = 1usize << 11;
        let axis_sum = |a: [f64; 2], b: [f64; 2]| {
            let ha = (a[1] - a[0]) / n as f64;
            let hb = (b[1] - b[0]) / n as f64;
            let mut s = 0.0;
            for i in 0..n {
                let u = a[0] + (i as f64 + 0.5) * ha;
                for j in 0..n {
                    let v = b[0] + (j as f64 + 0.5) * hb;
                    s += (-0.5 * (u - v) * (u - v)).exp();
                }
            }
            s * ha * hb
        };
        let a = Rectangle::unit_square_at(0.0);
        for delta in [0.3, 0.9, 1.5, 2.1, 2.7] {
            let b = Rectangle::unit_square_at(delta);
            let want = axis_sum(a.x, b.x) * axis_sum(a.y, b.y);
            let got = gaussian_rect_cov(&a, &b).unwrap();
            assert!(((got - want) / want).abs() < 1e-6, "delta={delta}");
        }
    }

    #[test]
    fn degenerate_rejected() {
        let a = Rectangle { x: [0.0, 0.0], y: [0.0, 1.0] };
        assert!(gaussian_rect_cov(&a, &Rectangle::unit_square_at(0.0)).is_err());
        assert!(Rectangle::new([1.0, 0.0], [0.0, 1.0]).is_err());
    }
}
