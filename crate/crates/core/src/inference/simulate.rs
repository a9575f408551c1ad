use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{FairError, Result};

use super::likelihood::factor;
use super::pd::nearest_pd;

/// Draws `mean + L eps + tau eps'` where `L L^T = K`.
#[derive(Debug, Clone)]
pub struct GaussianSampler {
    lower: DMatrix<f64>,
    tau: f64,
    /// Set when `K` had to be coerced to positive definite first.
    pub repaired: bool,
}

impl GaussianSampler {
    pub fn new(k: &DMatrix<f64>, tau2: f64) -> Result<Self> {
        if !(tau2 >= 0.0) {
            return Err(FairError::param(format!("nugget variance must be >= 0, got {tau2}")));
        }
        let (chol, repaired) = match factor(k.clone(), "sampler covariance") {
            Ok(c) => (c, false),
            Err(_) => (factor(nearest_pd(k), "repaired sampler covariance")?, true),
        };
        Ok(GaussianSampler {
            lower: chol.l(),
            tau: tau2.sqrt(),
            repaired,
        })
    }

    pub fn dim(&self) -> usize {
        self.lower.nrows()
    }

    pub fn sample<R: Rng>(&self, rng: &mut R, mean: &[f64]) -> Result<Vec<f64>> {
        let n = self.dim();
        if mean.len() != n {
            return Err(FairError::mismatch(n, mean.len()));
        }
        let eps = DVector::from_iterator(n, (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)));
        let z = &self.lower * eps;
        Ok((0..n)
            .map(|i| mean[i] + z[i] + self.tau * rng.sample::<f64, _>(StandardNormal))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn empirical_covariance() {
        let k = DMatrix::from_row_slice(2, 2, &[1.0, 0.6, 0.6, 2.0]);
        let s = GaussianSampler::new(&k, 0.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 40_000;
        let mut acc = DMatrix::<f64>::zeros(2, 2);
        for _ in 0..n {
            let z = s.sample(&mut rng, &[3.0, -1.0]).unwrap();
            let d = DVector::from_vec(vec![z[0] - 3.0, z[1] + 1.0]);
            acc += &d * d.transpose();
        }
        acc /= n as f64;
        let want = DMatrix::from_row_slice(2, 2, &[1.5, 0.6, 0.6, 2.5]);
        assert!((acc - want).amax() < 0.05);
    }

    #[test]
    fn repairs_semidefinite_input() {
        let k = DMatrix::from_element(2, 2, 1.0);
        let s = GaussianSampler::new(&k, 0.0).unwrap();
        assert!(s.repaired);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let z = s.sample(&mut rng, &[0.0, 0.0]).unwrap();
        assert!((z[0] - z[1]).abs() < 1e-4);
        assert!(s.sample(&mut rng, &[0.0]).is_err());
    }
}
