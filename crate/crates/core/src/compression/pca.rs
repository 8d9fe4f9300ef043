use ndarray::{Array1, Array2, ArrayView2, Axis};
use ndarray_linalg::{JobSvd, SVDDC};

use crate::error::{Error, Result};

/// Principal axes learned from training rows.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    pub mean: Array1<f64>,
    /// `[n_components, D]`, orthonormal rows in decreasing singular-value order.
    pub components: Array2<f64>,
    pub singular_values: Array1<f64>,
    n_train: usize,
}

impl PcaModel {
    pub fn n_components(&self) -> usize {
        self.components.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.components.ncols()
    }

    /// Sample variance captured by each component.
    pub fn explained_variance(&self) -> Array1<f64> {
        let denom = (self.n_train.max(2) - 1) as f64;
        self.singular_values.mapv(|s| s * s / denom)
    }

    /// `(x - mean) · componentsᵀ`.
    pub fn transform(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.n_features() {
            return Err(Error::Shape(format!(
                "PCA model expects {} features, got {}",
                self.n_features(),
                x.ncols()
            )));
        }
        let centered = &x - &self.mean.view().insert_axis(Axis(0));
        Ok(centered.dot(&self.components.t()))
    }

    pub fn inverse_transform(&self, z: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if z.ncols() != self.n_components() {
            return Err(Error::Shape(format!(
                "expected {} component scores, got {}",
                self.n_components(),
                z.ncols()
            )));
        }
        Ok(z.dot(&self.components) + self.mean.view().insert_axis(Axis(0)))
    }
}

/// Fits PCA by thin SVD of the column-centered training matrix.
///
/// Each component is flipped so that its largest-magnitude coordinate is
/// positive (first such coordinate on ties).
pub fn pca_fit(train: ArrayView2<'_, f64>, n_components: usize) -> Result<PcaModel> {
    let (n, d) = train.dim();
    if n_components == 0 || n_components > n.min(d) {
        return Err(Error::Invalid(format!(
            "n_components too large: {n_components} requested, at most min({n}, {d}) available"
        )));
    }
    let mean = train
        .mean_axis(Axis(0))
        .ok_or_else(|| Error::Invalid("empty training matrix".into()))?;
    let centered = &train - &mean.view().insert_axis(Axis(0));
    let scale = centered.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return Err(Error::Invalid(
            "degenerate input: training features are all constant".into(),
        ));
    }
    let (_, s, vt) = centered
        .svddc(JobSvd::Some)
        .map_err(|e| Error::Linalg(format!("svd failed: {e}")))?;
    let vt = vt.ok_or_else(|| Error::Linalg("svd returned no right singular vectors".into()))?;

    // LAPACK returns singular values in decreasing order already; sort anyway
    // so the ordering contract does not depend on the backend.
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&a, &b| s[b].total_cmp(&s[a]).then(a.cmp(&b)));
    order.truncate(n_components);

    let mut components = Array2::<f64>::zeros((n_components, d));
    let mut singular_values = Array1::<f64>::zeros(n_components);
    for (k, &src) in order.iter().enumerate() {
        let row = vt.row(src);
        let pivot = row
            .iter()
            .enumerate()
            .fold((0, 0.0f64), |best, (i, &v)| {
                if v.abs() > best.1 {
                    (i, v.abs())
                } else {
                    best
                }
            })
            .0;
        let sign = if row[pivot] < 0.0 { -1.0 } else { 1.0 };
        components.row_mut(k).assign(&row.mapv(|v| v * sign));
        singular_values[k] = s[src];
    }
    Ok(PcaModel {
        mean,
        components,
        singular_values,
        n_train: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn lcg_matrix(rows: usize, cols: usize, seed: u64) -> Array2<f64> {
        let mut s = seed;
        Array2::from_shape_fn((rows, cols), |_| {
            s = s
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        })
    }

    #[test]
    fn diagonal_cloud_direction() {
        let x = array![[-2.0, -2.0], [-1.0, -1.0], [0.5, 0.5], [3.0, 3.0]];
        let m = pca_fit(x.view(), 1).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((m.components[[0, 0]] - r).abs() < 1e-12);
        assert!((m.components[[0, 1]] - r).abs() < 1e-12);
    }

    #[test]
    fn single_variance_axis() {
        let x = array![
            [1.0, 5.0, 2.0],
            [1.0, -3.0, 2.0],
            [1.0, 0.0, 2.0],
            [1.0, 1.0, 2.0]
        ];
        let m = pca_fit(x.view(), 1).unwrap();
        assert!((m.components[[0, 1]] - 1.0).abs() < 1e-12);
        assert!(m.components[[0, 0]].abs() < 1e-12 && m.components[[0, 2]].abs() < 1e-12);
    }

    #[test]
    fn mean_row_maps_to_zero() {
        let x = lcg_matrix(30, 6, 3);
        let m = pca_fit(x.view(), 4).unwrap();
        let z = m.transform(m.mean.view().insert_axis(Axis(0))).unwrap();
        assert!(z.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn full_rank_reconstruction() {
        let x = lcg_matrix(20, 5, 11);
        let m = pca_fit(x.view(), 5).unwrap();
        let back = m
            .inverse_transform(m.transform(x.view()).unwrap().view())
            .unwrap();
        for (a, b) in x.iter().zip(back.iter()) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn contract_errors() {
        let x = lcg_matrix(4, 3, 1);
        assert!(pca_fit(x.view(), 4)
            .unwrap_err()
            .to_string()
            .contains("too large"));
        assert!(pca_fit(x.view(), 0).is_err());
        let flat = Array2::<f64>::from_elem((5, 3), 2.0);
        assert!(pca_fit(flat.view(), 1)
            .unwrap_err()
            .to_string()
            .contains("degenerate"));
        let m = pca_fit(x.view(), 2).unwrap();
        assert!(m.transform(lcg_matrix(2, 4, 2).view()).is_err());
    }

    #[test]
    fn orthonormal_decreasing_and_decorrelated() {
        let x = lcg_matrix(40, 12, 5);
        let m = pca_fit(x.view(), 8).unwrap();
        let gram = m.components.dot(&m.components.t());
        for i in 0..8 {
            for j in 0..8 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((gram[[i, j]] - want).abs() < 1e-6);
            }
        }
        let ev = m.explained_variance();
        assert!(ev.windows(2).into_iter().all(|w| w[0] >= w[1]));
        let z = m.transform(x.view()).unwrap();
        let cov = z.t().dot(&z) / 39.0;
        for i in 0..8 {
            for j in 0..8 {
                if i != j {
                    assert!(cov[[i, j]].abs() < 1e-6);
                }
            }
            assert!((cov[[i, i]] - ev[i]).abs() < 1e-9);
        }
    }
}
