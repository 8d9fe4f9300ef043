use ndarray::{Array1, Array2, ArrayView2, Axis};

const MIN_SCALE: f64 = 1e-12;

/// Column-wise z-scoring with statistics taken from a subset of rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub mean: Array1<f64>,
    pub scale: Array1<f64>,
}

impl Standardizer {
    /// Population mean and standard deviation over `rows`; columns with
    /// (near-)zero spread get unit scale so they are only centered.
    pub fn fit_rows(x: ArrayView2<'_, f64>, rows: &[usize]) -> Self {
        let n = rows.len().max(1) as f64;
        let mut mean = Array1::<f64>::zeros(x.ncols());
        for &r in rows {
            mean += &x.row(r);
        }
        mean /= n;
        let mut var = Array1::<f64>::zeros(x.ncols());
        for &r in rows {
            let d = &x.row(r) - &mean;
            var += &(&d * &d);
        }
        let scale = var.mapv(|v| {
            let sd = (v / n).sqrt();
            if sd < MIN_SCALE {
                1.0
            } else {
                sd
            }
        });
        Standardizer { mean, scale }
    }

    pub fn apply(&self, x: ArrayView2<'_, f64>) -> Array2<f64> {
        (&x - &self.mean.view().insert_axis(Axis(0))) / self.scale.view().insert_axis(Axis(0))
    }
}
