use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::compression::{PoolSpec, Scheme};
use crate::encoder::RidgeConfig;
use crate::error::{Error, Result};
use crate::tensor_store::{read_json, DatasetManifest, Layer, Stream};

/// Per-layer pooling override.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerCompression {
    pub stream: Stream,
    pub layer: Layer,
    #[serde(default)]
    pub target_grid: Option<(usize, usize)>,
    #[serde(default)]
    pub channel_groups: Option<usize>,
}

fn default_apic_target() -> usize {
    256
}
fn default_apbic_target() -> usize {
    64
}
fn default_components() -> usize {
    2000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompressionConfig {
    pub scheme: Scheme,
    /// Approximate APIC features per layer used to pick a default square grid.
    #[serde(default = "default_apic_target")]
    pub apic_target_features: usize,
    /// Exact APBIC features per layer.
    #[serde(default = "default_apbic_target")]
    pub target_features_per_layer: usize,
    #[serde(default = "default_components")]
    pub n_components: usize,
    #[serde(default)]
    pub layers: Vec<LayerCompression>,
}

impl Default for CompressionConfig {
    fn default() -> Self {
        CompressionConfig {
            scheme: Scheme::Apic,
            apic_target_features: default_apic_target(),
            target_features_per_layer: default_apbic_target(),
            n_components: default_components(),
            layers: Vec::new(),
        }
    }
}

impl CompressionConfig {
    fn layer_override(&self, stream: Stream, layer: Layer) -> Option<&LayerCompression> {
        self.layers
            .iter()
            .find(|l| l.stream == stream && l.layer == layer)
    }

    /// APIC geometry for a `C x H x W` layer: the override, or the square
    /// grid whose feature count is closest to `apic_target_features`.
    pub fn apic_spec(
        &self,
        stream: Stream,
        layer: Layer,
        dims: (usize, usize, usize),
    ) -> Result<PoolSpec> {
        let (c, h, w) = dims;
        let spec = match self
            .layer_override(stream, layer)
            .and_then(|o| o.target_grid)
        {
            Some((gh, gw)) => PoolSpec::apic(gh, gw),
            None => {
                let side = ((self.apic_target_features as f64 / c as f64).sqrt().round() as usize)
                    .clamp(1, h.min(w));
                PoolSpec::apic(side, side)
            }
        };
        spec.check_grid(h, w)?;
        Ok(spec)
    }

    /// APBIC geometry: explicit grid and groups, or the largest square grid
    /// that splits `target_features_per_layer` into at most `C` groups.
    pub fn apbic_spec(
        &self,
        stream: Stream,
        layer: Layer,
        dims: (usize, usize, usize),
    ) -> Result<PoolSpec> {
        let (c, h, w) = dims;
        let target = self.target_features_per_layer;
        let over = self.layer_override(stream, layer);
        let spec = match (
            over.and_then(|o| o.target_grid),
            over.and_then(|o| o.channel_groups),
        ) {
            (Some((gh, gw)), Some(g)) => PoolSpec::apbic(gh, gw, g),
            (Some(grid), None) => PoolSpec::for_target_features(grid, target, c)?,
            (None, groups) => {
                let side = (1..=h.min(w))
                    .rev()
                    .find(|&s| {
                        target.is_multiple_of(s * s)
                            && groups.map_or(target / (s * s) <= c, |g| g * s * s == target)
                    })
                    .ok_or_else(|| {
                        Error::Config(format!(
                            "target_features {target} not achievable for {stream}.{layer} ({c}x{h}x{w})"
                        ))
                    })?;
                match groups {
                    Some(g) => PoolSpec::apbic(side, side, g),
                    None => PoolSpec::for_target_features((side, side), target, c)?,
                }
            }
        };
        spec.check_grid(h, w)?;
        if spec.channel_groups == 0 || spec.channel_groups > c {
            return Err(Error::Config(format!(
                "target_features {} not achievable for {stream}.{layer}: {} groups for {c} channels",
                spec.target_features(),
                spec.channel_groups
            )));
        }
        if spec.target_features() != target {
            return Err(Error::Config(format!(
                "{stream}.{layer}: {} groups x {}x{} cells != target_features_per_layer {target}",
                spec.channel_groups, spec.target_grid.0, spec.target_grid.1
            )));
        }
        Ok(spec)
    }
}

fn default_lag() -> usize {
    2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    /// Dataset manifest; relative paths resolve against the config file.
    pub manifest: PathBuf,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub compression: CompressionConfig,
    /// Must match the manifest when given.
    #[serde(default)]
    pub tr_seconds: Option<f64>,
    #[serde(default = "default_lag")]
    pub lag_trs: usize,
    #[serde(default)]
    pub ridge: RidgeConfig,
}

impl PipelineConfig {
    pub fn new(manifest: impl Into<PathBuf>, output_dir: impl Into<PathBuf>) -> Self {
        PipelineConfig {
            manifest: manifest.into(),
            output_dir: output_dir.into(),
            seed: 0,
            compression: CompressionConfig::default(),
            tr_seconds: None,
            lag_trs: default_lag(),
            ridge: RidgeConfig::default(),
        }
    }

    /// Parses and validates a config file, resolving relative paths against
    /// its directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut cfg: PipelineConfig = read_json(path).map_err(|e| match e {
            Error::Json { path, source } => Error::Config(format!("{}: {source}", path.display())),
            other => other,
        })?;
        let base = path.parent().unwrap_or(Path::new(""));
        if cfg.manifest.is_relative() {
            cfg.manifest = base.join(&cfg.manifest);
        }
        if cfg.output_dir.is_relative() {
            cfg.output_dir = base.join(&cfg.output_dir);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.ridge.validate()?;
        if let Some(tr) = self.tr_seconds {
            if !(tr.is_finite() && tr > 0.0) {
                return Err(Error::Config(format!(
                    "tr_seconds must be positive, got {tr}"
                )));
            }
        }
        let c = &self.compression;
        if c.apic_target_features == 0 || c.target_features_per_layer == 0 || c.n_components == 0 {
            return Err(Error::Config("compression sizes must be positive".into()));
        }
        for o in &c.layers {
            if matches!(o.target_grid, Some((0, _)) | Some((_, 0))) || o.channel_groups == Some(0) {
                return Err(Error::Config(format!(
                    "{}.{}: zero-sized override",
                    o.stream, o.layer
                )));
            }
        }
        Ok(())
    }

    /// Loads the manifest and checks it against the config.
    pub fn load_manifest(&self) -> Result<DatasetManifest> {
        let manifest = DatasetManifest::load(&self.manifest)?;
        if let Some(tr) = self.tr_seconds {
            if (tr - manifest.tr_seconds).abs() > 1e-12 {
                return Err(Error::Config(format!(
                    "config tr_seconds {tr} disagrees with manifest {}",
                    manifest.tr_seconds
                )));
            }
        }
        if self.ridge.outer_splits > manifest.session_lengths.len() {
            return Err(Error::Config(format!(
                "outer_splits {} exceeds {} sessions",
                self.ridge.outer_splits,
                manifest.session_lengths.len()
            )));
        }
        Ok(manifest)
    }
}
