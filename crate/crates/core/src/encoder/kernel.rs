use ndarray::{Array2, ArrayView2};
use ndarray_linalg::error::LinalgError;
use ndarray_linalg::{Cholesky, Diag, SolveTriangular, UPLO};

use crate::error::{Error, Result};

/// Linear kernel: `K[i, j] = <x_i, y_j>`.
pub fn gram(x: ArrayView2<'_, f64>, y_rows: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    if x.ncols() != y_rows.ncols() {
        return Err(Error::Shape(format!(
            "gram: {} features vs {} features",
            x.ncols(),
            y_rows.ncols()
        )));
    }
    Ok(x.dot(&y_rows.t()))
}

/// Lower Cholesky factor of `K + αI`.
#[derive(Debug, Clone)]
pub struct CholeskyFactor {
    lower: Array2<f64>,
    alpha: f64,
}

impl CholeskyFactor {
    pub fn new(k: ArrayView2<'_, f64>, alpha: f64) -> Result<Self> {
        let n = k.nrows();
        if n != k.ncols() {
            return Err(Error::Shape(format!(
                "kernel must be square, got {:?}",
                k.dim()
            )));
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::Invalid(format!(
                "alpha must be positive, got {alpha}"
            )));
        }
        let mut reg = k.to_owned();
        for i in 0..n {
            reg[[i, i]] += alpha;
        }
        let lower = reg.cholesky(UPLO::Lower).map_err(|e| match e {
            LinalgError::Lapack(lax::error::Error::LapackComputationalFailure { return_code }) => {
                Error::Factorization {
                    pivot: (return_code.max(1) - 1) as usize,
                    alpha,
                }
            }
            other => Error::Linalg(format!("cholesky: {other}")),
        })?;
        Ok(CholeskyFactor { lower, alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Solves `(K + αI) X = B`.
    pub fn solve(&self, b: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if b.nrows() != self.lower.nrows() {
            return Err(Error::Shape(format!(
                "right-hand side has {} rows, factor has {}",
                b.nrows(),
                self.lower.nrows()
            )));
        }
        let b = b.to_owned();
        let z = self
            .lower
            .solve_triangular(UPLO::Lower, Diag::NonUnit, &b)
            .map_err(|e| Error::Linalg(format!("forward substitution: {e}")))?;
        let upper = self.lower.t().to_owned();
        upper
            .solve_triangular(UPLO::Upper, Diag::NonUnit, &z)
            .map_err(|e| Error::Linalg(format!("back substitution: {e}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualSolution {
    /// `[n_train, V]`, solving `(K + αI) A = Y`.
    pub dual_weights: Array2<f64>,
    pub alpha: f64,
    /// Sample rows of the full dataset the kernel columns refer to.
    pub train_rows: Vec<usize>,
}

fn check_symmetric(k: ArrayView2<'_, f64>) -> Result<()> {
    let scale = k.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    for i in 0..k.nrows() {
        for j in 0..i {
            if (k[[i, j]] - k[[j, i]]).abs() > 1e-10 * scale {
                return Err(Error::Invalid(format!(
                    "kernel is not symmetric at ({i}, {j})"
                )));
            }
        }
    }
    Ok(())
}

/// Kernel ridge fit for every voxel column of `y_train` in one factorization.
pub fn krr_fit(
    k_train: ArrayView2<'_, f64>,
    y_train: ArrayView2<'_, f64>,
    alpha: f64,
) -> Result<DualSolution> {
    if k_train.nrows() != y_train.nrows() {
        return Err(Error::Shape(format!(
            "kernel has {} rows, targets have {}",
            k_train.nrows(),
            y_train.nrows()
        )));
    }
    check_symmetric(k_train)?;
    let factor = CholeskyFactor::new(k_train, alpha)?;
    let dual_weights = factor.solve(y_train)?;
    Ok(DualSolution {
        dual_weights,
        alpha,
        train_rows: (0..k_train.nrows()).collect(),
    })
}

pub fn krr_predict(k_test_train: ArrayView2<'_, f64>, sol: &DualSolution) -> Result<Array2<f64>> {
    if k_test_train.ncols() != sol.dual_weights.nrows() {
        return Err(Error::Shape(format!(
            "test kernel has {} columns, solution has {} training rows",
            k_test_train.ncols(),
            sol.dual_weights.nrows()
        )));
    }
    Ok(k_test_train.dot(&sol.dual_weights))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};

    fn matrix(rows: usize, cols: usize, seed: u64) -> Array2<f64> {
        let mut s = seed;
        Array2::from_shape_fn((rows, cols), |_| {
            s = s
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        })
    }

    #[test]
    fn gram_examples() {
        let eye = Array2::<f64>::eye(3);
        assert_eq!(gram(eye.view(), eye.view()).unwrap(), eye);
        assert_eq!(
            gram(array![[1.0, 2.0]].view(), array![[3.0, 4.0]].view()).unwrap(),
            array![[11.0]]
        );
        assert!(gram(eye.view(), array![[1.0, 2.0]].view()).is_err());
    }

    #[test]
    fn gram_matches_triple_loop() {
        let x = matrix(20, 7, 9);
        let k = gram(x.view(), x.view()).unwrap();
        for i in 0..20 {
            for j in 0..20 {
                let mut acc = 0.0;
                for f in 0..7 {
                    acc += x[[i, f]] * x[[j, f]];
                }
                assert!((k[[i, j]] - acc).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn scalar_case() {
        let sol = krr_fit(array![[1.0]].view(), array![[2.0]].view(), 1.0).unwrap();
        assert!((sol.dual_weights[[0, 0]] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn huge_penalty_kills_weights() {
        let x = matrix(15, 4, 1);
        let y = matrix(15, 3, 2);
        let k = gram(x.view(), x.view()).unwrap();
        let sol = krr_fit(k.view(), y.view(), 1e12).unwrap();
        assert!(sol.dual_weights.iter().all(|v| v.abs() < 1e-9));
    }

    #[test]
    fn residual_of_dual_system() {
        let x = matrix(25, 6, 3);
        let y = matrix(25, 4, 4);
        let k = gram(x.view(), x.view()).unwrap();
        let alpha = 0.3;
        let sol = krr_fit(k.view(), y.view(), alpha).unwrap();
        let lhs = k.dot(&sol.dual_weights) + &(&sol.dual_weights * alpha);
        let rel = (&lhs - &y).iter().map(|v| v * v).sum::<f64>().sqrt()
            / y.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(rel < 1e-8);
    }

    #[test]
    fn zero_kernel_predicts_zero() {
        let x = matrix(10, 3, 5);
        let sol = krr_fit(
            gram(x.view(), x.view()).unwrap().view(),
            matrix(10, 2, 6).view(),
            1.0,
        )
        .unwrap();
        let p = krr_predict(Array2::<f64>::zeros((4, 10)).view(), &sol).unwrap();
        assert!(p.iter().all(|&v| v == 0.0));
        assert!(krr_predict(Array2::<f64>::zeros((4, 9)).view(), &sol).is_err());
    }

    #[test]
    fn interpolating_fit_reproduces_training_target() {
        // 8 samples in 12 dimensions: full-rank Gram matrix.
        let x = matrix(8, 12, 7);
        let y = matrix(8, 2, 8);
        let k = gram(x.view(), x.view()).unwrap();
        let sol = krr_fit(k.view(), y.view(), 1e-9).unwrap();
        let k_row = gram(x.slice(ndarray::s![3..4, ..]), x.view()).unwrap();
        let p = krr_predict(k_row.view(), &sol).unwrap();
        assert!((p[[0, 0]] - y[[3, 0]]).abs() < 1e-4);
        assert!((p[[0, 1]] - y[[3, 1]]).abs() < 1e-4);
    }

    #[test]
    fn indefinite_kernel_reports_pivot() {
        let k = array![[1.0, 0.0, 0.0], [0.0, -5.0, 0.0], [0.0, 0.0, 1.0]];
        match krr_fit(k.view(), array![[1.0], [1.0], [1.0]].view(), 1e-3) {
            Err(Error::Factorization { pivot, .. }) => assert_eq!(pivot, 1),
            other => panic!("expected factorization failure, got {other:?}"),
        }
        assert!(krr_fit(k.view(), array![[1.0], [1.0], [1.0]].view(), 0.0).is_err());
        assert!(krr_fit(
            array![[1.0, 2.0], [0.0, 1.0]].view(),
            array![[1.0], [1.0]].view(),
            1.0
        )
        .is_err());
    }
}
