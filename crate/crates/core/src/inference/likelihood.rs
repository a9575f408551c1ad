use std::f64::consts::PI;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use crate::error::{FairError, Result};
use crate::fourier::CovMatrix;
use crate::geometry::IndicatorField;

/// Regional observations `Z_i = z_i + eps_i` with prior means and nugget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationSet {
    pub ids: Vec<String>,
    pub z: Vec<f64>,
    pub mu: Vec<f64>,
    pub tau2: f64,
}

impl ObservationSet {
    pub fn new(ids: Vec<String>, z: Vec<f64>, mu: Vec<f64>, tau2: f64) -> Result<Self> {
        if ids.len() != z.len() {
            return Err(FairError::mismatch(format!("{} values", ids.len()), z.len()));
        }
        if mu.len() != z.len() {
            return Err(FairError::mismatch(format!("{} means", z.len()), mu.len()));
        }
        if !(tau2 >= 0.0 && tau2.is_finite()) {
            return Err(FairError::param(format!("nugget variance must be >= 0, got {tau2}")));
        }
        if let Some(v) = z.iter().chain(&mu).find(|v| !v.is_finite()) {
            return Err(FairError::param(format!("non-finite observation or mean {v}")));
        }
        Ok(ObservationSet { ids, z, mu, tau2 })
    }

    /// Ids `"0"`, `"1"`, ...
    pub fn unlabeled(z: Vec<f64>, mu: Vec<f64>, tau2: f64) -> Result<Self> {
        let ids = (0..z.len()).map(|i| i.to_string()).collect();
        Self::new(ids, z, mu, tau2)
    }

    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    /// `r = Z - mu`.
    pub fn residual(&self) -> DVector<f64> {
        DVector::from_iterator(self.len(), self.z.iter().zip(&self.mu).map(|(z, m)| z - m))
    }
}

/// `mu_i = sum_k I_i[k] m[k] Delta / |B_i|`.
pub fn region_means(fields: &[IndicatorField], mean_fn: &[f64]) -> Result<Vec<f64>> {
    fields
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let grid = f.grid();
            if mean_fn.len() != grid.len() {
                return Err(FairError::mismatch(grid.len(), mean_fn.len()));
            }
            let mass = f.sum();
            if !(mass > 0.0) {
                return Err(FairError::ZeroArea(i));
            }
            let s: f64 = f.nonzero().map(|(a, b, v)| v * mean_fn[grid.index(a, b)]).sum();
            Ok(s / mass)
        })
        .collect()
}

/// `K + tau2 I`, factored.
pub(crate) fn factor_with_nugget(
    k: &DMatrix<f64>,
    tau2: f64,
) -> Result<Cholesky<f64, Dyn>> {
    let mut a = k.clone();
    for i in 0..a.nrows() {
        a[(i, i)] += tau2;
    }
    factor(a, "K + tau2 I")
}

pub(crate) fn factor(a: DMatrix<f64>, what: &str) -> Result<Cholesky<f64, Dyn>> {
    match Cholesky::new(a.clone()) {
        Some(c) => Ok(c),
        None => Err(FairError::NotPositiveDefinite {
            context: format!("{what}, {}x{}", a.nrows(), a.ncols()),
            matrix: Box::new(a),
        }),
    }
}

pub(crate) fn log_det(c: &Cholesky<f64, Dyn>) -> f64 {
    2.0 * c.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>()
}

fn check_dim(k: &CovMatrix, obs: &ObservationSet) -> Result<()> {
    if k.dim() != obs.len() {
        return Err(FairError::mismatch(
            format!("{} observations", k.dim()),
            obs.len(),
        ));
    }
    Ok(())
}

/// `1/2 r^T A^-1 r + 1/2 log|A| + (n/2) log 2 pi` with `A = K + tau2 I`.
///
/// A failed factorization returns [`FairError::NotPositiveDefinite`]
/// carrying `A`, which callers may pass through [`super::nearest_pd`].
pub fn neg_log_lik(k: &CovMatrix, obs: &ObservationSet) -> Result<f64> {
    check_dim(k, obs)?;
    let chol = factor_with_nugget(&k.matrix, obs.tau2)?;
    let r = obs.residual();
    let quad = r.dot(&chol.solve(&r));
    let n = obs.len() as f64;
    Ok(0.5 * quad + 0.5 * log_det(&chol) + 0.5 * n * (2.0 * PI).ln())
}

/// `beta = (K + tau2 I)^-1 (Z - mu)`, with one step of iterative refinement.
pub fn kriging_weights(k: &CovMatrix, obs: &ObservationSet) -> Result<Vec<f64>> {
    check_dim(k, obs)?;
    let chol = factor_with_nugget(&k.matrix, obs.tau2)?;
    let r = obs.residual();
    let mut a = k.matrix.clone();
    for i in 0..a.nrows() {
        a[(i, i)] += obs.tau2;
    }
    let mut beta = chol.solve(&r);
    let res = &r - &a * &beta;
    beta += chol.solve(&res);
    Ok(beta.iter().copied().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fourier::{Method, RegularGrid};
    use crate::geometry::{rasterize_fractional, Polygon};

    fn cov(m: DMatrix<f64>) -> CovMatrix {
        CovMatrix::new(m, Method::Fair, 0, None).unwrap()
    }

    #[test]
    fn scalar_nll() {
        let k = cov(DMatrix::from_element(1, 1, 1.0));
        let at_mode = ObservationSet::unlabeled(vec![0.0], vec![0.0], 0.0).unwrap();
        assert!((neg_log_lik(&k, &at_mode).unwrap() - 0.918_938_533_204_672_7).abs() < 1e-15);
        let unit = ObservationSet::unlabeled(vec![1.0], vec![0.0], 0.0).unwrap();
        assert!((neg_log_lik(&k, &unit).unwrap() - 1.418_938_533_204_672_7).abs() < 1e-15);
    }

    #[test]
    fn scalar_weights_and_zero_residual() {
        let k = cov(DMatrix::from_element(1, 1, 2.0));
        let obs = ObservationSet::unlabeled(vec![3.0], vec![0.5], 0.5).unwrap();
        assert!((kriging_weights(&k, &obs).unwrap()[0] - 2.5 / 2.5).abs() < 1e-15);
        let k = cov(DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]));
        let obs = ObservationSet::unlabeled(vec![1.0, 2.0], vec![1.0, 2.0], 0.1).unwrap();
        assert_eq!(kriging_weights(&k, &obs).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn not_pd_carries_matrix() {
        let k = cov(DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]));
        let obs = ObservationSet::unlabeled(vec![1.0, 0.0], vec![0.0, 0.0], 0.0).unwrap();
        match neg_log_lik(&k, &obs) {
            Err(FairError::NotPositiveDefinite { matrix, .. }) => assert_eq!(matrix[(0, 1)], 2.0),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn observation_validation() {
        assert!(ObservationSet::unlabeled(vec![1.0], vec![], 0.0).is_err());
        assert!(ObservationSet::unlabeled(vec![1.0], vec![0.0], -1.0).is_err());
        assert!(ObservationSet::new(vec!["a".into()], vec![1.0, 2.0], vec![0.0, 0.0], 0.0).is_err());
        let k = cov(DMatrix::identity(2, 2));
        let obs = ObservationSet::unlabeled(vec![1.0], vec![0.0], 0.0).unwrap();
        assert!(neg_log_lik(&k, &obs).is_err());
    }

    #[test]
    fn means_over_regions() {
        let g = RegularGrid::covering(-2.0, 2.0, 128).unwrap();
        let sq = Polygon::new(vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]).unwrap();
        let f = rasterize_fractional(&sq, &g, 4).unwrap();
        let c = region_means(&[f.clone()], &vec![3.5; g.len()]).unwrap();
        assert!((c[0] - 3.5).abs() < 1e-14);
        let mut xs = vec![0.0; g.len()];
        for i in 0..128 {
            for j in 0..128 {
                xs[g.index(i, j)] = g.x_center(i);
            }
        }
        let m = region_means(&[f.clone()], &xs).unwrap();
        assert!((m[0] - 0.5).abs() < 1e-12);
        assert!(region_means(&[f], &[0.0; 3]).is_err());
    }

    #[test]
    fn linear_mean_over_triangle() {
        // centroid of the triangle is (1/3, 1/3), so the mean of 2x - y + 1 is 4/3
        let g = RegularGrid::covering(-1.0, 2.0, 256).unwrap();
        let tri = Polygon::new(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]).unwrap();
        let f = rasterize_fractional(&tri, &g, 4).unwrap();
        let mut plane = vec![0.0; g.len()];
        for i in 0..256 {
            for j in 0..256 {
                let [x, y] = g.cell_center(i, j);
                plane[g.index(i, j)] = 2.0 * x - y + 1.0;
            }
        }
        let m = region_means(&[f], &plane).unwrap();
        assert!(((m[0] - 4.0 / 3.0) / (4.0 / 3.0)).abs() < 0.01);
    }
}
