use nalgebra::DMatrix;

use crate::error::{FairError, Result};

use super::likelihood::{factor, log_det};

fn same_shape(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<()> {
    if a.shape() != b.shape() || !a.is_square() {
        return Err(FairError::mismatch(
            format!("square {:?}", a.shape()),
            format!("{:?}", b.shape()),
        ));
    }
    Ok(())
}

/// Root mean squared entrywise difference, `(1/n) sqrt(sum (A - B)^2)`.
pub fn rmsed(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<f64> {
    same_shape(a, b)?;
    Ok((a - b).norm() / a.nrows() as f64)
}

/// Maximum absolute entrywise difference.
pub fn maed(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<f64> {
    same_shape(a, b)?;
    Ok((a - b).amax())
}

/// `1/2 (tr(A^-1 B) - n + log(det A / det B))`.
pub fn kl_div(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<f64> {
    same_shape(a, b)?;
    let chol = factor(a.clone(), "first argument of kl_div")?;
    let trace = chol.solve(b).trace();
    let lu = b.clone().lu();
    let u = lu.u();
    let mut log_det_b = 0.0;
    let mut negative = lu.p().determinant::<f64>() < 0.0;
    for d in u.diagonal().iter() {
        if *d == 0.0 {
            return Err(FairError::param("second argument of kl_div is singular"));
        }
        negative ^= *d < 0.0;
        log_det_b += d.abs().ln();
    }
    if negative {
        return Err(FairError::param("second argument of kl_div has negative determinant"));
    }
    Ok(0.5 * (trace - a.nrows() as f64 + log_det(&chol) - log_det_b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_matrices() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]);
        assert_eq!(rmsed(&a, &a).unwrap(), 0.0);
        assert_eq!(maed(&a, &a).unwrap(), 0.0);
        assert!(kl_div(&a, &a).unwrap().abs() < 1e-15);
    }

    #[test]
    fn scalar_case() {
        let a = DMatrix::from_element(1, 1, 2.0);
        let b = DMatrix::from_element(1, 1, 1.0);
        assert_eq!(rmsed(&a, &b).unwrap(), 1.0);
        assert_eq!(maed(&a, &b).unwrap(), 1.0);
        let want = 0.5 * (0.5 - 1.0 + 2f64.ln());
        assert!((kl_div(&a, &b).unwrap() - want).abs() < 1e-15);
        assert!((want - 0.09657).abs() < 1e-5);
    }

    #[test]
    fn entrywise_definitions() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        let b = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 0.0]);
        assert!((rmsed(&a, &b).unwrap() - 1.5f64.sqrt() / 2.0).abs() < 1e-15);
        assert_eq!(maed(&a, &b).unwrap(), 1.0);
        assert!(kl_div(&a, &b).is_err());
        assert!(kl_div(&b, &a).is_err());
        assert!(rmsed(&a, &DMatrix::zeros(3, 3)).is_err());
    }

    #[test]
    fn kl_against_dense_formula() {
        let a = DMatrix::<f64>::from_row_slice(3, 3, &[2.0, 0.4, 0.1, 0.4, 1.5, 0.3, 0.1, 0.3, 1.0]);
        let b = DMatrix::from_row_slice(3, 3, &[1.0, 0.2, 0.0, 0.2, 2.0, 0.5, 0.0, 0.5, 1.2]);
        let want = 0.5
            * ((a.clone().try_inverse().unwrap() * &b).trace() - 3.0
                + (a.determinant() / b.determinant()).ln());
        let got = kl_div(&a, &b).unwrap();
        assert!((got - want).abs() < 1e-12);
        assert!(got > 0.0);
    }
}
