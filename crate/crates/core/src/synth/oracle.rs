//! Brute-force reference implementations used to cross-check the fast paths.
//!
//! Nothing here calls LAPACK, BLAS or the compression module.

use ndarray::{Array1, Array2, ArrayView2, ArrayView4};

use crate::compression::Scheme;
use crate::error::{Error, Result};

/// Solves `A x = b` in place by Gaussian elimination with partial pivoting.
pub fn gauss_solve(mut a: Array2<f64>, mut b: Array2<f64>) -> Result<Array2<f64>> {
    let n = a.nrows();
    let m = b.ncols();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[[i, col]].abs().total_cmp(&a[[j, col]].abs()))
            .unwrap();
        if a[[pivot, col]] == 0.0 {
            return Err(Error::Linalg(format!("singular system at column {col}")));
        }
        if pivot != col {
            for k in 0..n {
                a.swap([col, k], [pivot, k]);
            }
            for k in 0..m {
                b.swap([col, k], [pivot, k]);
            }
        }
        for r in col + 1..n {
            let f = a[[r, col]] / a[[col, col]];
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                a[[r, k]] -= f * a[[col, k]];
            }
            for k in 0..m {
                b[[r, k]] -= f * b[[col, k]];
            }
        }
    }
    let mut x = Array2::<f64>::zeros((n, m));
    for r in (0..n).rev() {
        for k in 0..m {
            let mut s = b[[r, k]];
            for j in r + 1..n {
                s -= a[[r, j]] * x[[j, k]];
            }
            x[[r, k]] = s / a[[r, r]];
        }
    }
    Ok(x)
}

/// Primal ridge weights `(XᵀX + αI)⁻¹ Xᵀ Y`, one column per target.
pub fn oracle_ridge(
    x: ArrayView2<'_, f64>,
    y: ArrayView2<'_, f64>,
    alpha: f64,
) -> Result<Array2<f64>> {
    let (t, d) = x.dim();
    if y.nrows() != t {
        return Err(Error::Shape(format!("x has {t} rows, y has {}", y.nrows())));
    }
    let mut a = Array2::<f64>::zeros((d, d));
    let mut b = Array2::<f64>::zeros((d, y.ncols()));
    for i in 0..d {
        for j in 0..d {
            a[[i, j]] = (0..t).map(|s| x[[s, i]] * x[[s, j]]).sum();
        }
        a[[i, i]] += alpha;
        for k in 0..y.ncols() {
            b[[i, k]] = (0..t).map(|s| x[[s, i]] * y[[s, k]]).sum();
        }
    }
    gauss_solve(a, b)
}

/// Nested-loop APIC/APBIC over a `[frames, C, H, W]` tensor.
pub fn oracle_pool(
    acts: ArrayView4<'_, f64>,
    grid: (usize, usize),
    channel_groups: usize,
    scheme: Scheme,
) -> Array2<f64> {
    let (frames, c, h, w) = acts.dim();
    let (ho, wo) = grid;
    let groups = match scheme {
        Scheme::Apbic => channel_groups,
        _ => c,
    };
    let mut out = Array2::<f64>::zeros((frames, groups * ho * wo));
    for f in 0..frames {
        for g in 0..groups {
            let (c0, c1) = (g * c / groups, (g + 1) * c / groups);
            for i in 0..ho {
                for j in 0..wo {
                    let (y0, y1) = (i * h / ho, (i + 1) * h / ho);
                    let (x0, x1) = (j * w / wo, (j + 1) * w / wo);
                    // Mean of per-channel cell means.
                    let mut total = 0.0;
                    for ch in c0..c1 {
                        let mut s = 0.0;
                        for y in y0..y1 {
                            for x in x0..x1 {
                                s += acts[[f, ch, y, x]];
                            }
                        }
                        total += s / ((y1 - y0) * (x1 - x0)) as f64;
                    }
                    out[[f, (g * ho + i) * wo + j]] = total / (c1 - c0) as f64;
                }
            }
        }
    }
    out
}

/// Eigenvalues (descending) and eigenvectors (rows) of the sample covariance
/// of `x`, by cyclic Jacobi rotations.
pub fn oracle_covariance_eigen(x: ArrayView2<'_, f64>) -> (Array1<f64>, Array2<f64>) {
    let (n, d) = x.dim();
    let mean: Vec<f64> = (0..d)
        .map(|j| (0..n).map(|i| x[[i, j]]).sum::<f64>() / n as f64)
        .collect();
    let mut a = Array2::<f64>::zeros((d, d));
    for p in 0..d {
        for q in 0..d {
            a[[p, q]] = (0..n)
                .map(|i| (x[[i, p]] - mean[p]) * (x[[i, q]] - mean[q]))
                .sum::<f64>()
                / (n as f64 - 1.0);
        }
    }
    let mut v = Array2::<f64>::eye(d);
    for _sweep in 0..100 {
        let off: f64 = (0..d)
            .flat_map(|p| (0..d).filter(move |&q| q != p).map(move |q| (p, q)))
            .map(|(p, q)| a[[p, q]] * a[[p, q]])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..d {
            for q in p + 1..d {
                if a[[p, q]].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[[q, q]] - a[[p, p]]) / (2.0 * a[[p, q]]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..d {
                    let (akp, akq) = (a[[k, p]], a[[k, q]]);
                    a[[k, p]] = c * akp - s * akq;
                    a[[k, q]] = s * akp + c * akq;
                }
                for k in 0..d {
                    let (apk, aqk) = (a[[p, k]], a[[q, k]]);
                    a[[p, k]] = c * apk - s * aqk;
                    a[[q, k]] = s * apk + c * aqk;
                }
                for k in 0..d {
                    let (vkp, vkq) = (v[[k, p]], v[[k, q]]);
                    v[[k, p]] = c * vkp - s * vkq;
                    v[[k, q]] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| a[[j, j]].total_cmp(&a[[i, i]]));
    let values = order.iter().map(|&i| a[[i, i]]).collect();
    let mut vectors = Array2::<f64>::zeros((d, d));
    for (r, &i) in order.iter().enumerate() {
        for k in 0..d {
            vectors[[r, k]] = v[[k, i]];
        }
    }
    (values, vectors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn diagonal_ridge() {
        let w = oracle_ridge(Array2::eye(2).view(), array![[2.0], [4.0]].view(), 1.0).unwrap();
        assert!((w[[0, 0]] - 1.0).abs() < 1e-15 && (w[[1, 0]] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn gauss_needs_pivoting() {
        let x = gauss_solve(array![[0.0, 1.0], [1.0, 0.0]], array![[3.0], [5.0]]).unwrap();
        assert_eq!(x, array![[5.0], [3.0]]);
        assert!(gauss_solve(array![[1.0, 1.0], [1.0, 1.0]], array![[1.0], [1.0]]).is_err());
    }

    #[test]
    fn jacobi_on_known_covariance() {
        // Points on y = 2x: one nonzero eigenvalue along (1, 2)/√5.
        let x = array![[0.0, 0.0], [1.0, 2.0], [2.0, 4.0]];
        let (vals, vecs) = oracle_covariance_eigen(x.view());
        assert!((vals[0] - 5.0).abs() < 1e-12 && vals[1].abs() < 1e-12);
        let r = vecs[[0, 1]] / vecs[[0, 0]];
        assert!((r - 2.0).abs() < 1e-12);
    }
}
