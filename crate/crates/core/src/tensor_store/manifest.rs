//! JSON sidecar describing a dataset directory.
//!
//! ```json
//! {
//!   "tr_seconds": 2.0,
//!   "session_lengths": [100, 100],
//!   "activations": [
//!     { "stream": "rgb", "layer": "L1", "path": "activations/rgb.L1.dvft",
//!       "frame_rate": 1.0, "session_frames": [200, 200] }
//!   ],
//!   "responses": "responses.dvft",
//!   "mask": "mask.dvft",
//!   "ground_truth": "ground_truth.json"
//! }
//! ```
//!
//! Relative paths resolve against the manifest's directory.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::format::read_tensor;
use super::series::{Layer, LayerActivationSeries, Stream, VoxelSeries};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActivationEntry {
    pub stream: Stream,
    pub layer: Layer,
    pub path: PathBuf,
    pub frame_rate: f64,
    /// Frame count of each session; must sum to the tensor's first dim.
    pub session_frames: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub tr_seconds: f64,
    /// fMRI samples per session.
    pub session_lengths: Vec<usize>,
    pub activations: Vec<ActivationEntry>,
    pub responses: PathBuf,
    pub mask: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_truth: Option<PathBuf>,
    #[serde(skip)]
    pub root: PathBuf,
}

impl DatasetManifest {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut manifest: DatasetManifest = read_json(path)?;
        manifest.root = path.parent().map(Path::to_path_buf).unwrap_or_default();
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_json(path, self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tr_seconds.is_finite() && self.tr_seconds > 0.0) {
            return Err(Error::Manifest(format!(
                "tr_seconds must be positive, got {}",
                self.tr_seconds
            )));
        }
        if self.session_lengths.is_empty() || self.session_lengths.contains(&0) {
            return Err(Error::Manifest(
                "session_lengths must be non-empty and positive".into(),
            ));
        }
        for entry in &self.activations {
            if entry.session_frames.len() != self.session_lengths.len() {
                return Err(Error::Manifest(format!(
                    "{}.{}: {} session_frames entries for {} sessions",
                    entry.stream,
                    entry.layer,
                    entry.session_frames.len(),
                    self.session_lengths.len()
                )));
            }
        }
        let mut keys: Vec<_> = self
            .activations
            .iter()
            .map(|e| (e.stream, e.layer))
            .collect();
        keys.sort();
        if keys.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Manifest(
                "duplicate (stream, layer) activation entry".into(),
            ));
        }
        Ok(())
    }

    pub fn resolve(&self, rel: &Path) -> PathBuf {
        if rel.is_absolute() {
            rel.to_path_buf()
        } else {
            self.root.join(rel)
        }
    }

    pub fn entry(&self, stream: Stream, layer: Layer) -> Option<&ActivationEntry> {
        self.activations
            .iter()
            .find(|e| e.stream == stream && e.layer == layer)
    }

    pub fn load_activations(&self, entry: &ActivationEntry) -> Result<LayerActivationSeries> {
        let data = read_tensor(self.resolve(&entry.path))?;
        let series =
            LayerActivationSeries::from_dyn(entry.stream, entry.layer, data, entry.frame_rate)?;
        let total: usize = entry.session_frames.iter().sum();
        if total != series.frames() {
            return Err(Error::Manifest(format!(
                "{}.{}: session_frames sum to {total} but tensor has {} frames",
                entry.stream,
                entry.layer,
                series.frames()
            )));
        }
        Ok(series)
    }

    pub fn load_responses(&self) -> Result<VoxelSeries> {
        let data = read_tensor(self.resolve(&self.responses))?;
        let mask = read_tensor(self.resolve(&self.mask))?;
        VoxelSeries::from_dyn(data, self.session_lengths.clone(), mask)
            .map_err(|e| Error::Manifest(e.to_string()))
    }
}

pub fn read_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::json(path, e))
}

pub fn write_json<T: Serialize + ?Sized>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let path = path.as_ref();
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::json(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_rejected() {
        let text = r#"{"tr_seconds":2.0,"session_lengths":[1],"activations":[],
            "responses":"r.dvft","mask":"m.dvft","extra":1}"#;
        assert!(serde_json::from_str::<DatasetManifest>(text).is_err());
    }

    #[test]
    fn session_frame_count_must_match() {
        let text = r#"{"tr_seconds":2.0,"session_lengths":[1,2],"activations":[
            {"stream":"rgb","layer":"L1","path":"a","frame_rate":1.0,"session_frames":[2]}],
            "responses":"r.dvft","mask":"m.dvft"}"#;
        let m: DatasetManifest = serde_json::from_str(text).unwrap();
        assert!(m.validate().is_err());
    }
}
