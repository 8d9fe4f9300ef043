//! Spatial compression of layer activations and alignment to the scanner TR.

mod pca;
mod pool;
mod resample;
mod standardize;

use ndarray::{Array2, ArrayD, Ix2};
use serde::{Deserialize, Serialize};

pub use pca::{pca_fit, PcaModel};
pub use pool::{apbic_compress, apic_compress, cell_range, channel_group_ranges, PoolSpec};
pub use resample::{complete_windows, resample_sessions, shift_rows, temporal_resample};
pub use standardize::Standardizer;

use crate::error::{Error, Result};
use crate::tensor_store::session_ranges;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Pca,
    Apic,
    Apbic,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::Pca, Scheme::Apic, Scheme::Apbic];

    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::Pca => "pca",
            Scheme::Apic => "apic",
            Scheme::Apbic => "apbic",
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// TR-aligned features `[samples, D]` for one representation.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    pub data: Array2<f64>,
    pub session_lengths: Vec<usize>,
    /// `"<stream>.<layer>.<scheme>"`.
    pub representation_id: String,
}

impl DesignMatrix {
    pub fn new(
        data: Array2<f64>,
        session_lengths: Vec<usize>,
        representation_id: impl Into<String>,
    ) -> Result<Self> {
        let total: usize = session_lengths.iter().sum();
        if total != data.nrows() {
            return Err(Error::Shape(format!(
                "session lengths sum to {total} but design matrix has {} rows",
                data.nrows()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Invalid(format!(
                "design matrix contains a non-finite value at flat index {pos}"
            )));
        }
        Ok(Self {
            data,
            session_lengths,
            representation_id: representation_id.into(),
        })
    }

    pub fn from_dyn(
        data: ArrayD<f64>,
        session_lengths: Vec<usize>,
        representation_id: impl Into<String>,
    ) -> Result<Self> {
        let data = data
            .into_dimensionality::<Ix2>()
            .map_err(|_| Error::Shape("design matrix tensor must be 2-D".into()))?;
        Self::new(data, session_lengths, representation_id)
    }

    pub fn n_samples(&self) -> usize {
        self.data.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.data.ncols()
    }

    pub fn n_sessions(&self) -> usize {
        self.session_lengths.len()
    }

    /// Row indices of every session except `held`.
    pub fn rows_excluding_session(&self, held: usize) -> Vec<usize> {
        session_ranges(&self.session_lengths)
            .into_iter()
            .enumerate()
            .filter(|(k, _)| *k != held)
            .flat_map(|(_, r)| r)
            .collect()
    }
}
