//! Score contrasts between representations and the sign-profile parcellation.

use std::fmt::Write as _;
use std::path::Path;

use ndarray::Array1;
use serde::{Deserialize, Serialize};

use crate::encoder::{write_voxel_csv, ScoreMap};
use crate::error::{Error, Result};
use crate::tensor_store::{read_tensor, write_tensor, Dtype, Layer, Stream};

/// Per-voxel score difference; `None` wherever either input was flagged.
#[derive(Debug, Clone, PartialEq)]
pub struct ContrastMap {
    pub values: Vec<Option<f64>>,
    pub contrast_id: String,
}

/// `"<layer>.<stream>-minus-<layer>.<stream>"`.
pub fn contrast_id(a: (Layer, Stream), b: (Layer, Stream)) -> String {
    format!("{}.{}-minus-{}.{}", a.0, a.1, b.0, b.1)
}

pub fn contrast(a: &ScoreMap, b: &ScoreMap) -> Result<ContrastMap> {
    contrast_named(
        a,
        b,
        format!("{}-minus-{}", a.representation_id, b.representation_id),
    )
}

pub fn contrast_named(
    a: &ScoreMap,
    b: &ScoreMap,
    contrast_id: impl Into<String>,
) -> Result<ContrastMap> {
    if a.n_voxels() != b.n_voxels() {
        return Err(Error::Shape(format!(
            "contrast between maps of {} and {} voxels",
            a.n_voxels(),
            b.n_voxels()
        )));
    }
    let values = a
        .scores
        .iter()
        .zip(&b.scores)
        .map(|(x, y)| Some((*x)? - (*y)?))
        .collect();
    Ok(ContrastMap {
        values,
        contrast_id: contrast_id.into(),
    })
}

impl ContrastMap {
    pub fn to_tensor(&self) -> Array1<f64> {
        self.values.iter().map(|v| v.unwrap_or(f64::NAN)).collect()
    }

    pub fn write(&self, tensor_path: impl AsRef<Path>, csv_path: impl AsRef<Path>) -> Result<()> {
        write_tensor(tensor_path, self.to_tensor().into_dyn().view(), Dtype::F64)?;
        write_voxel_csv(csv_path, "contrast", &self.values)
    }

    pub fn read(path: impl AsRef<Path>, contrast_id: impl Into<String>) -> Result<Self> {
        let t = read_tensor(path)?;
        if t.ndim() != 1 {
            return Err(Error::Shape("contrast tensor must be 1-D".into()));
        }
        Ok(ContrastMap {
            values: t.iter().map(|&v| (!v.is_nan()).then_some(v)).collect(),
            contrast_id: contrast_id.into(),
        })
    }
}

/// 3-bit sign code per voxel, `None` for inactive voxels.
///
/// Built from the contrasts `L2.flow − L4.flow` (bit 0), `L2.rgb − L4.rgb`
/// (bit 1) and `L1.flow − L4.rgb` (bit 2); a bit is set when its contrast is
/// strictly positive.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProfileMap {
    pub codes: Vec<Option<u8>>,
}

/// Stored value of inactive voxels in profile tensors.
pub const INACTIVE_CODE: f64 = -1.0;

/// The three contrasts the parcellation is built from, in bit order.
pub fn parcellation_contrasts() -> [((Layer, Stream), (Layer, Stream)); 3] {
    [
        ((Layer::L2, Stream::Flow), (Layer::L4, Stream::Flow)),
        ((Layer::L2, Stream::Rgb), (Layer::L4, Stream::Rgb)),
        ((Layer::L1, Stream::Flow), (Layer::L4, Stream::Rgb)),
    ]
}

/// Human-readable description of a profile code.
pub fn profile_label(code: u8) -> String {
    parcellation_contrasts()
        .iter()
        .enumerate()
        .map(|(bit, (a, b))| {
            let op = if code >> bit & 1 == 1 { ">" } else { "<=" };
            format!("{}.{}{op}{}.{}", a.0, a.1, b.0, b.1)
        })
        .collect::<Vec<_>>()
        .join(", ")
}

/// Voxel is active when its best score over `activity` exceeds `threshold`.
/// A flagged contrast on an active voxel contributes a zero bit.
pub fn parcellate(
    c1: &ContrastMap,
    c2: &ContrastMap,
    c3: &ContrastMap,
    activity: &[&ScoreMap],
    threshold: f64,
) -> Result<ProfileMap> {
    let n = c1.values.len();
    if c2.values.len() != n || c3.values.len() != n || activity.iter().any(|s| s.n_voxels() != n) {
        return Err(Error::Shape(
            "parcellation inputs disagree on voxel count".into(),
        ));
    }
    let codes = (0..n)
        .map(|v| {
            let best = activity
                .iter()
                .filter_map(|s| s.scores[v])
                .fold(f64::NEG_INFINITY, f64::max);
            if best > threshold {
                let bit = |c: &ContrastMap| matches!(c.values[v], Some(x) if x > 0.0) as u8;
                Some(bit(c1) | bit(c2) << 1 | bit(c3) << 2)
            } else {
                None
            }
        })
        .collect();
    Ok(ProfileMap { codes })
}

impl ProfileMap {
    pub fn active_count(&self) -> usize {
        self.codes.iter().flatten().count()
    }

    pub fn to_tensor(&self) -> Array1<f64> {
        self.codes
            .iter()
            .map(|c| c.map_or(INACTIVE_CODE, f64::from))
            .collect()
    }

    pub fn write(&self, tensor_path: impl AsRef<Path>, csv_path: impl AsRef<Path>) -> Result<()> {
        write_tensor(tensor_path, self.to_tensor().into_dyn().view(), Dtype::F32)?;
        let csv_path = csv_path.as_ref();
        let mut text = String::from("voxel_id,code,active\n");
        for (v, c) in self.codes.iter().enumerate() {
            match c {
                Some(code) => writeln!(text, "{v},{code},1"),
                None => writeln!(text, "{v},,0"),
            }
            .expect("writing to a String");
        }
        std::fs::write(csv_path, text).map_err(|e| Error::io(csv_path, e))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileCount {
    pub code: u8,
    pub voxel_count: usize,
    pub fraction_of_active: f64,
    pub label: String,
}

/// Active-voxel counts per code, most populated first (ties by code).
pub fn profile_summary(p: &ProfileMap) -> Vec<ProfileCount> {
    let mut counts = [0usize; 8];
    for code in p.codes.iter().flatten() {
        counts[*code as usize] += 1;
    }
    let active = p.active_count();
    let mut rows: Vec<ProfileCount> = counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(code, &c)| ProfileCount {
            code: code as u8,
            voxel_count: c,
            fraction_of_active: c as f64 / active as f64,
            label: profile_label(code as u8),
        })
        .collect();
    rows.sort_by(|a, b| b.voxel_count.cmp(&a.voxel_count).then(a.code.cmp(&b.code)));
    rows
}

pub fn format_summary_table(rows: &[ProfileCount]) -> String {
    let mut out = format!(
        "{:>4}  {:>8}  {:>8}  profile\n",
        "code", "voxels", "fraction"
    );
    for r in rows {
        writeln!(
            out,
            "{:>4}  {:>8}  {:>8.4}  {}",
            r.code, r.voxel_count, r.fraction_of_active, r.label
        )
        .expect("writing to a String");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map(scores: &[Option<f64>]) -> ScoreMap {
        ScoreMap {
            scores: scores.to_vec(),
            representation_id: "r".into(),
            n_splits_used: 1,
        }
    }

    fn cmap(values: &[f64]) -> ContrastMap {
        ContrastMap {
            values: values.iter().map(|&v| Some(v)).collect(),
            contrast_id: "c".into(),
        }
    }

    #[test]
    fn contrast_examples() {
        let a = map(&[Some(0.5), Some(0.2)]);
        let b = map(&[Some(0.1), Some(0.4)]);
        let c = contrast(&a, &b).unwrap();
        assert!((c.values[0].unwrap() - 0.4).abs() < 1e-15);
        assert!((c.values[1].unwrap() + 0.2).abs() < 1e-15);
        assert!(contrast(&a, &a)
            .unwrap()
            .values
            .iter()
            .all(|v| *v == Some(0.0)));
        let flagged = map(&[Some(0.1), None]);
        assert_eq!(contrast(&a, &flagged).unwrap().values[1], None);
        assert!(contrast(&a, &map(&[Some(0.0)])).is_err());
    }

    #[test]
    fn foveal_profile_code() {
        let act = map(&[Some(0.5)]);
        let p = parcellate(&cmap(&[0.2]), &cmap(&[0.1]), &cmap(&[-0.3]), &[&act], 0.1).unwrap();
        assert_eq!(p.codes, vec![Some(0b011)]);
    }

    #[test]
    fn zero_scores_are_inactive() {
        let act = map(&[Some(0.0), Some(0.0)]);
        let c = cmap(&[0.0, 0.0]);
        let p = parcellate(&c, &c, &c, &[&act, &act], 0.1).unwrap();
        assert_eq!(p.codes, vec![None, None]);
        assert!(profile_summary(&p).is_empty());
    }

    #[test]
    fn exact_zero_contrast_is_bit_zero() {
        let act = map(&[Some(0.9)]);
        let p = parcellate(&cmap(&[0.0]), &cmap(&[1.0]), &cmap(&[0.0]), &[&act], 0.1).unwrap();
        assert_eq!(p.codes, vec![Some(0b010)]);
    }

    #[test]
    fn sign_enumeration() {
        // Every sign triple, written out directly.
        let signs = [-1.0, 1.0];
        let mut c = [vec![], vec![], vec![]];
        let mut expected = vec![];
        for &s2 in &signs {
            for &s1 in &signs {
                for &s0 in &signs {
                    c[0].push(0.05 * s0);
                    c[1].push(0.07 * s1);
                    c[2].push(0.11 * s2);
                    let code = (s0 > 0.0) as u8 + 2 * (s1 > 0.0) as u8 + 4 * (s2 > 0.0) as u8;
                    expected.push(Some(code));
                }
            }
        }
        let act = map(&[Some(0.3); 8]);
        let p = parcellate(&cmap(&c[0]), &cmap(&c[1]), &cmap(&c[2]), &[&act], 0.1).unwrap();
        assert_eq!(p.codes, expected);
        assert_eq!(expected, (0..8).map(Some).collect::<Vec<_>>());
    }

    #[test]
    fn summary_counts() {
        let p = ProfileMap {
            codes: vec![Some(3), Some(3), Some(6), None],
        };
        let s = profile_summary(&p);
        assert_eq!(s.len(), 2);
        assert_eq!((s[0].code, s[0].voxel_count), (3, 2));
        assert!((s[0].fraction_of_active - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!((s[1].code, s[1].voxel_count), (6, 1));
        assert!((s[1].fraction_of_active - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(
            profile_label(3),
            "L2.flow>L4.flow, L2.rgb>L4.rgb, L1.flow<=L4.rgb"
        );
    }

    #[test]
    fn ids() {
        assert_eq!(
            contrast_id((Layer::L4, Stream::Flow), (Layer::L2, Stream::Flow)),
            "L4.flow-minus-L2.flow"
        );
    }
}
