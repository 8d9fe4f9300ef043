//! Configuration and file-based drivers for each pipeline stage.
//!
//! Stages hand off through files under the configured output directory:
//!
//! ```text
//! designs/<id>.dvft, designs/designs.json      compress
//! scores/<id>.{dvft,csv}, fit_report.json      fit-score
//! contrasts/<id>.{dvft,csv}, contrasts.json     contrast
//! profile/profile.{dvft,csv}, profile_summary.json  parcellate
//! benchmark/*.csv, benchmark_report.json        benchmark-compression
//! ```

mod config;
mod stages;

use std::path::{Path, PathBuf};

pub use config::{CompressionConfig, LayerCompression, PipelineConfig};
pub use stages::*;

use crate::error::Result;
use crate::synth::{gen_dataset, write_dataset, SynthSpec};

/// `synth`: generates a dataset and writes it to `dir`; returns the manifest path.
pub fn run_synth(spec: &SynthSpec, dir: impl AsRef<Path>) -> Result<PathBuf> {
    let data = gen_dataset(spec)?;
    write_dataset(dir, spec, &data)
}
