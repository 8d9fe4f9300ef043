//! Symmetric eigendecomposition through LAPACK `dsyevd`.
//!
//! `ndarray-linalg` only exposes `dsyev`; the divide-and-conquer driver is
//! several times faster on the Gram matrices the α search decomposes.

use std::os::raw::c_char;

use ndarray::{Array1, Array2, ArrayView2};

use crate::error::{Error, Result};

/// `K = Qᵀ diag(values) Q`, with one eigenvector per row of `vectors_t`.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub values: Array1<f64>,
    /// `Qᵀ`: row `j` is the eigenvector of `values[j]`.
    pub vectors_t: Array2<f64>,
}

pub fn symmetric_eigen(k: ArrayView2<'_, f64>) -> Result<SymmetricEigen> {
    let n = k.nrows();
    if n != k.ncols() {
        return Err(Error::Shape(format!(
            "eigendecomposition needs a square matrix, got {:?}",
            k.dim()
        )));
    }
    // Row-major storage of a symmetric matrix is also a valid column-major one.
    let mut a: Vec<f64> = k.iter().copied().collect();
    let mut w = vec![0.0f64; n];
    let jobz = b'V' as c_char;
    let uplo = b'L' as c_char;
    let n_i = i32::try_from(n).map_err(|_| Error::Linalg("matrix too large for LAPACK".into()))?;
    let lda = n_i.max(1);
    let mut info = 0i32;
    let mut work_query = [0.0f64; 1];
    let mut iwork_query = [0i32; 1];
    let query = -1i32;
    // SAFETY: all pointers reference live buffers of the sizes LAPACK expects
    // (a: n*n, w: n); the workspace query writes one element to each query buffer.
    unsafe {
        lapack_sys::dsyevd_(
            &jobz,
            &uplo,
            &n_i,
            a.as_mut_ptr(),
            &lda,
            w.as_mut_ptr(),
            work_query.as_mut_ptr(),
            &query,
            iwork_query.as_mut_ptr(),
            &query,
            &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Linalg(format!(
            "dsyevd workspace query failed (info = {info})"
        )));
    }
    let lwork = work_query[0] as i32;
    let liwork = iwork_query[0];
    let mut work = vec![0.0f64; lwork.max(1) as usize];
    let mut iwork = vec![0i32; liwork.max(1) as usize];
    // SAFETY: work/iwork sized from the workspace query above.
    unsafe {
        lapack_sys::dsyevd_(
            &jobz,
            &uplo,
            &n_i,
            a.as_mut_ptr(),
            &lda,
            w.as_mut_ptr(),
            work.as_mut_ptr(),
            &lwork,
            iwork.as_mut_ptr(),
            &liwork,
            &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Linalg(format!(
            "dsyevd failed to converge (info = {info})"
        )));
    }
    // Column-major eigenvector matrix read as row-major is its transpose.
    let vectors_t = Array2::from_shape_vec((n, n), a).expect("n*n buffer");
    Ok(SymmetricEigen {
        values: Array1::from(w),
        vectors_t,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};

    #[test]
    fn reconstructs_matrix() {
        let k = array![[4.0, 1.0, 0.5], [1.0, 3.0, -0.2], [0.5, -0.2, 2.0]];
        let e = symmetric_eigen(k.view()).unwrap();
        let q_t = &e.vectors_t;
        let back = q_t.t().dot(&Array2::from_diag(&e.values)).dot(q_t);
        for (a, b) in k.iter().zip(back.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(e.values.windows(2).into_iter().all(|w| w[0] <= w[1]));
    }
}
