use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ndarray::{Array1, ArrayView2};

use crate::error::{Error, Result};
use crate::tensor_store::{read_tensor, write_tensor, Dtype};

/// Below this total sum of squares a voxel is flagged instead of scored.
pub const ZERO_VARIANCE_EPS: f64 = 1e-12;

/// Cross-validated coefficient of determination.
///
/// `1 - Σ(pred - real)² / Σ(real - mean(real))²`; `None` flags a voxel whose
/// real signal has (near-)zero variance.
pub fn m_cv(y_pred: &[f64], y_real: &[f64]) -> Result<Option<f64>> {
    if y_pred.len() != y_real.len() {
        return Err(Error::Shape(format!(
            "m_cv: {} predictions for {} observations",
            y_pred.len(),
            y_real.len()
        )));
    }
    let n = y_real.len();
    if n < 2 {
        return Err(Error::Invalid(format!(
            "m_cv needs at least 2 samples, got {n}"
        )));
    }
    let mean = y_real.iter().sum::<f64>() / n as f64;
    let ss_tot: f64 = y_real.iter().map(|y| (y - mean) * (y - mean)).sum();
    if ss_tot < ZERO_VARIANCE_EPS {
        return Ok(None);
    }
    let ss_res: f64 = y_pred
        .iter()
        .zip(y_real)
        .map(|(p, y)| (p - y) * (p - y))
        .sum();
    Ok(Some(1.0 - ss_res / ss_tot))
}

/// `m_cv` of every column pair.
pub fn m_cv_columns(
    pred: ArrayView2<'_, f64>,
    real: ArrayView2<'_, f64>,
) -> Result<Vec<Option<f64>>> {
    if pred.dim() != real.dim() {
        return Err(Error::Shape(format!(
            "prediction shape {:?} vs response shape {:?}",
            pred.dim(),
            real.dim()
        )));
    }
    let n = real.nrows();
    if n < 2 {
        return Err(Error::Invalid(format!(
            "m_cv needs at least 2 samples, got {n}"
        )));
    }
    let mut out = Vec::with_capacity(real.ncols());
    for (p, y) in pred.columns().into_iter().zip(real.columns()) {
        let mean = y.sum() / n as f64;
        let mut ss_tot = 0.0;
        let mut ss_res = 0.0;
        for (pv, yv) in p.iter().zip(y.iter()) {
            ss_tot += (yv - mean) * (yv - mean);
            ss_res += (pv - yv) * (pv - yv);
        }
        out.push((ss_tot >= ZERO_VARIANCE_EPS).then(|| 1.0 - ss_res / ss_tot));
    }
    Ok(out)
}

/// Per-voxel mean of the scores that are not flagged, in split order.
pub fn mean_unflagged(per_split: &[Vec<Option<f64>>], n_voxels: usize) -> Vec<Option<f64>> {
    (0..n_voxels)
        .map(|v| {
            let (sum, count) = per_split
                .iter()
                .filter_map(|s| s[v])
                .fold((0.0, 0usize), |(s, c), x| (s + x, c + 1));
            (count > 0).then(|| sum / count as f64)
        })
        .collect()
}

/// Held-out `m_cv` per voxel for one representation; `None` is the
/// zero-variance flag.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMap {
    pub scores: Vec<Option<f64>>,
    pub representation_id: String,
    pub n_splits_used: usize,
}

impl ScoreMap {
    pub fn n_voxels(&self) -> usize {
        self.scores.len()
    }

    pub fn count_above(&self, threshold: f64) -> usize {
        self.scores
            .iter()
            .filter(|s| matches!(s, Some(v) if *v > threshold))
            .count()
    }

    /// Flagged voxels are stored as NaN.
    pub fn to_tensor(&self) -> Array1<f64> {
        self.scores.iter().map(|s| s.unwrap_or(f64::NAN)).collect()
    }

    pub fn write(&self, tensor_path: impl AsRef<Path>, csv_path: impl AsRef<Path>) -> Result<()> {
        write_tensor(tensor_path, self.to_tensor().into_dyn().view(), Dtype::F64)?;
        write_voxel_csv(csv_path, "score", &self.scores)
    }

    pub fn read(
        path: impl AsRef<Path>,
        representation_id: impl Into<String>,
        n_splits_used: usize,
    ) -> Result<Self> {
        let t = read_tensor(path)?;
        if t.ndim() != 1 {
            return Err(Error::Shape("score map tensor must be 1-D".into()));
        }
        Ok(ScoreMap {
            scores: t.iter().map(|&v| (!v.is_nan()).then_some(v)).collect(),
            representation_id: representation_id.into(),
            n_splits_used,
        })
    }
}

/// `voxel_id,<column>,flagged` with shortest round-trip float formatting.
pub fn write_voxel_csv(path: impl AsRef<Path>, column: &str, values: &[Option<f64>]) -> Result<()> {
    let path = path.as_ref();
    let mut text = format!("voxel_id,{column},flagged\n");
    for (v, s) in values.iter().enumerate() {
        match s {
            Some(x) => writeln!(text, "{v},{x},0"),
            None => writeln!(text, "{v},,1"),
        }
        .expect("writing to a String");
    }
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}
