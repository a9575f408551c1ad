use nalgebra::{DMatrix, SymmetricEigen};

/// Relative eigenvalue floor used by [`nearest_pd`].
pub const PD_EPSILON: f64 = 1e-10;

/// Symmetrizes, then clips eigenvalues below `1e-10 * lambda_max` up to that
/// floor. Inputs that are already comfortably positive definite come back
/// unchanged.
pub fn nearest_pd(k: &DMatrix<f64>) -> DMatrix<f64> {
    let sym = (k + k.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym.clone());
    let top = eig.eigenvalues.max();
    let scale = if top > 0.0 { top } else { eig.eigenvalues.amax().max(1.0) };
    let eps = PD_EPSILON * scale;
    if eig.eigenvalues.min() > eps {
        return sym;
    }
    let clipped = eig.eigenvalues.map(|l| l.max(eps));
    let v = &eig.eigenvectors;
    let out = v * DMatrix::from_diagonal(&clipped) * v.transpose();
    (&out + out.transpose()) * 0.5
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
        let mut e: Vec<f64> = SymmetricEigen::new(m.clone()).eigenvalues.iter().copied().collect();
        e.sort_by(f64::total_cmp);
        e
    }

    #[test]
    fn identity_unchanged() {
        let i = DMatrix::<f64>::identity(4, 4);
        assert_eq!(nearest_pd(&i), i);
    }

    #[test]
    fn clips_negative_diagonal() {
        let m = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, -0.001]));
        let out = nearest_pd(&m);
        assert!((out[(0, 0)] - 1.0).abs() < 1e-15);
        assert!((out[(1, 1)] - 1e-10).abs() < 1e-22);
        assert!(out[(0, 1)].abs() < 1e-20);
    }

    #[test]
    fn singular_two_by_two() {
        // eigenvalues {2, 0}
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let e = eigenvalues(&nearest_pd(&m));
        assert!((e[0] - 2e-10).abs() < 1e-15, "{e:?}");
        assert!((e[1] - 2.0).abs() < 1e-14);
        assert!(nalgebra::Cholesky::new(nearest_pd(&m)).is_some());
    }

    fn symmetric(n: usize) -> impl Strategy<Value = DMatrix<f64>> {
        proptest::collection::vec(-1.0f64..1.0, n * n).prop_map(move |v| {
            let m = DMatrix::from_vec(n, n, v);
            &m + m.transpose()
        })
    }

    proptest! {
        #[test]
        fn idempotent(m in (2usize..7).prop_flat_map(symmetric)) {
            let once = nearest_pd(&m);
            let twice = nearest_pd(&once);
            let scale = once.amax();
            prop_assert!((&twice - &once).amax() <= 1e-12 * scale);
            prop_assert!(eigenvalues(&once)[0] > 0.0);
        }

        #[test]
        fn pd_inputs_preserved(m in (2usize..7).prop_flat_map(symmetric)) {
            let n = m.nrows();
            let pd = &m * m.transpose() + DMatrix::<f64>::identity(n, n) * 0.1;
            prop_assert_eq!(nearest_pd(&pd), (&pd + pd.transpose()) * 0.5);
        }
    }
}
