use std::path::{Path, PathBuf};

use ndarray::{Array1, Array2, Array4, Axis};
use serde::{Deserialize, Serialize};

use super::rng::CounterStream;
use crate::compression::resample_sessions;
use crate::error::{Error, Result};
use crate::tensor_store::{
    write_json, write_tensor, ActivationEntry, DatasetManifest, Dtype, Layer,
    LayerActivationSeries, Stream, VoxelSeries,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerSpec {
    pub stream: Stream,
    pub layer: Layer,
    pub channels: usize,
    pub height: usize,
    pub width: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SignalBasis {
    /// Responses are linear in per-channel spatial means.
    #[default]
    ChannelMeans,
    /// Responses are linear in a few individual activation values.
    PixelLevel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterPlanEntry {
    pub profile_code: u8,
    pub voxel_count: usize,
}

fn default_frame_rate() -> f64 {
    1.0
}
fn default_tr() -> f64 {
    2.0
}
fn default_lag() -> usize {
    2
}
fn default_window() -> usize {
    3
}
fn default_mask_fraction() -> f64 {
    1.0
}
fn default_pixels() -> usize {
    8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpec {
    pub seed: u64,
    pub sessions: usize,
    pub samples_per_session: usize,
    #[serde(default = "default_frame_rate")]
    pub frame_rate: f64,
    #[serde(default = "default_tr")]
    pub tr_seconds: f64,
    /// Hemodynamic lag baked into the responses; match the pipeline's `lag_trs`.
    #[serde(default = "default_lag")]
    pub lag_trs: usize,
    pub layers: Vec<LayerSpec>,
    pub voxels: usize,
    /// Signal-to-noise variance ratio; absent or null means noiseless.
    #[serde(default)]
    pub snr: Option<f64>,
    #[serde(default)]
    pub signal_basis: SignalBasis,
    #[serde(default)]
    pub cluster_plan: Option<Vec<ClusterPlanEntry>>,
    /// Side of the spatial box filter applied to each channel's white noise.
    #[serde(default = "default_window")]
    pub smoothing_window: usize,
    /// Leading fraction of voxels in the selection mask.
    #[serde(default = "default_mask_fraction")]
    pub mask_fraction: f64,
    /// When set, responses are driven by activations drawn from this seed
    /// instead of the written ones (null-model datasets).
    #[serde(default)]
    pub response_seed: Option<u64>,
    /// Activation values per voxel under `pixel_level`.
    #[serde(default = "default_pixels")]
    pub pixels_per_voxel: usize,
}

impl SynthSpec {
    pub fn frames_per_tr(&self) -> Result<usize> {
        let f = self.frame_rate * self.tr_seconds;
        let r = f.round();
        if r < 1.0 || (f - r).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "frame_rate * tr_seconds must be a positive integer, got {f}"
            )));
        }
        Ok(r as usize)
    }

    pub fn validate(&self) -> Result<()> {
        if self.sessions == 0
            || self.samples_per_session == 0
            || self.voxels == 0
            || self.layers.is_empty()
        {
            return Err(Error::Config(
                "synthetic dataset counts must be positive".into(),
            ));
        }
        if self
            .layers
            .iter()
            .any(|l| l.channels == 0 || l.height == 0 || l.width == 0)
        {
            return Err(Error::Config("layer dimensions must be positive".into()));
        }
        if let Some(snr) = self.snr {
            if snr.is_nan() || snr < 0.0 {
                return Err(Error::Config(format!("snr must be >= 0, got {snr}")));
            }
        }
        if self.smoothing_window == 0 {
            return Err(Error::Config("smoothing_window must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.mask_fraction) {
            return Err(Error::Config("mask_fraction must lie in [0, 1]".into()));
        }
        self.frames_per_tr()?;
        let mut keys: Vec<_> = self.layers.iter().map(|l| (l.stream, l.layer)).collect();
        keys.sort();
        if keys.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Config(
                "duplicate (stream, layer) in synthetic layers".into(),
            ));
        }
        if let Some(plan) = &self.cluster_plan {
            if plan.iter().any(|e| e.profile_code > 7) {
                return Err(Error::Config(
                    "infeasible cluster_plan: profile codes are 0..=7".into(),
                ));
            }
            let total: usize = plan.iter().map(|e| e.voxel_count).sum();
            if total > self.voxels {
                return Err(Error::Config(format!(
                    "infeasible cluster_plan: {total} planned voxels exceed {}",
                    self.voxels
                )));
            }
            for (layer, stream) in PROFILE_LAYERS {
                if !keys.contains(&(stream, layer)) {
                    return Err(Error::Config(format!(
                        "infeasible cluster_plan: layer {layer}.{stream} is required"
                    )));
                }
            }
        }
        Ok(())
    }
}

const PROFILE_LAYERS: [(Layer, Stream); 5] = [
    (Layer::L1, Stream::Flow),
    (Layer::L2, Stream::Flow),
    (Layer::L4, Stream::Flow),
    (Layer::L2, Stream::Rgb),
    (Layer::L4, Stream::Rgb),
];

/// (representation index, share) pairs and the planted profile code.
type VoxelPlan = (Vec<(usize, f64)>, Option<u8>);

/// Variance shares per representation realizing a sign profile.
///
/// Independent layers make each representation's held-out score roughly its
/// share of the response variance, so the shares are chosen so every
/// contrast the code depends on differs by at least one unit.
pub fn profile_shares(code: u8) -> Vec<((Layer, Stream), f64)> {
    let mut units = vec![];
    if code & 1 == 1 {
        units.push(((Layer::L2, Stream::Flow), 1.0));
    } else {
        units.push(((Layer::L4, Stream::Flow), 1.0));
    }
    match (code >> 1 & 1, code >> 2 & 1) {
        (1, 1) => {
            units.push(((Layer::L2, Stream::Rgb), 1.0));
            units.push(((Layer::L1, Stream::Flow), 1.0));
        }
        (1, 0) => {
            units.push(((Layer::L2, Stream::Rgb), 2.0));
            units.push(((Layer::L4, Stream::Rgb), 1.0));
        }
        (0, 1) => {
            units.push(((Layer::L4, Stream::Rgb), 1.0));
            units.push(((Layer::L1, Stream::Flow), 2.0));
        }
        _ => units.push(((Layer::L4, Stream::Rgb), 1.0)),
    }
    let total: f64 = units.iter().map(|u| u.1).sum();
    units.into_iter().map(|(k, u)| (k, u / total)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contribution {
    pub stream: Stream,
    pub layer: Layer,
    /// Fraction of the noiseless response variance budget.
    pub share: f64,
    pub coefficients: Vec<f64>,
    /// Flat `(c, h, w)` activation indices under `pixel_level`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pixel_indices: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoxelTruth {
    pub voxel: usize,
    pub contributions: Vec<Contribution>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile_code: Option<u8>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub voxels: Vec<VoxelTruth>,
    pub noiseless_responses: Array2<f64>,
}

impl GroundTruth {
    /// Voxels driven by exactly one representation, that one being `(stream, layer)`.
    pub fn generating_voxels(&self, stream: Stream, layer: Layer) -> Vec<usize> {
        self.voxels
            .iter()
            .filter(|v| {
                v.contributions.len() == 1
                    && v.contributions[0].stream == stream
                    && v.contributions[0].layer == layer
            })
            .map(|v| v.voxel)
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct SynthDataset {
    pub activations: Vec<LayerActivationSeries>,
    pub responses: VoxelSeries,
    pub truth: GroundTruth,
    pub session_frames: Vec<usize>,
    pub tr_seconds: f64,
}

fn layer_index(spec: &SynthSpec, stream: Stream, layer: Layer) -> usize {
    spec.layers
        .iter()
        .position(|l| l.stream == stream && l.layer == layer)
        .expect("validated layer")
}

/// Smoothed white noise per channel, rounded through f32 so the stored
/// tensors reproduce the values the responses were computed from.
fn gen_activations(
    seed: u64,
    index: usize,
    layer: &LayerSpec,
    frames: usize,
    window: usize,
) -> Array4<f64> {
    let (c, h, w) = (layer.channels, layer.height, layer.width);
    let stream = CounterStream::new(seed, "activations", &[index as u64]);
    let plane = h * w;
    let radius = window / 2;
    let mut data = Array4::<f64>::zeros((frames, c, h, w));
    let mut noise = vec![0.0f64; plane];
    let mut rows = vec![0.0f64; plane];
    for f in 0..frames {
        for ch in 0..c {
            let base = ((f * c + ch) * plane) as u64;
            for (k, z) in noise.iter_mut().enumerate() {
                *z = stream.normal(base + k as u64);
            }
            // Separable box filter, truncated at the borders.
            for y in 0..h {
                for x in 0..w {
                    let (x0, x1) = (x.saturating_sub(radius), (x + radius + 1).min(w));
                    rows[y * w + x] =
                        noise[y * w + x0..y * w + x1].iter().sum::<f64>() / (x1 - x0) as f64;
                }
            }
            let mut out = data.slice_mut(ndarray::s![f, ch, .., ..]);
            for y in 0..h {
                let (y0, y1) = (y.saturating_sub(radius), (y + radius + 1).min(h));
                for x in 0..w {
                    let s: f64 = (y0..y1).map(|yy| rows[yy * w + x]).sum();
                    out[[y, x]] = (s / (y1 - y0) as f64) as f32 as f64;
                }
            }
        }
    }
    data
}

/// TR-aligned, lagged regressors the responses are linear in.
fn response_basis(
    spec: &SynthSpec,
    acts: &Array4<f64>,
    session_frames: &[usize],
    session_lengths: &[usize],
) -> Result<Array2<f64>> {
    let frames = acts.len_of(Axis(0));
    let per_frame = match spec.signal_basis {
        SignalBasis::ChannelMeans => {
            let c = acts.len_of(Axis(1));
            let mut m = Array2::<f64>::zeros((frames, c));
            for f in 0..frames {
                for ch in 0..c {
                    m[[f, ch]] = acts.slice(ndarray::s![f, ch, .., ..]).mean().unwrap();
                }
            }
            m
        }
        SignalBasis::PixelLevel => {
            let width = acts.len() / frames;
            acts.to_shape((frames, width)).unwrap().to_owned()
        }
    };
    resample_sessions(
        per_frame.view(),
        session_frames,
        session_lengths,
        spec.frame_rate,
        spec.tr_seconds,
        spec.lag_trs,
    )
}

fn standardized(v: Array1<f64>) -> Array1<f64> {
    let n = v.len() as f64;
    let mean = v.sum() / n;
    let sd = (v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n).sqrt();
    if sd > 0.0 {
        v.mapv(|x| (x - mean) / sd)
    } else {
        v.mapv(|x| x - mean)
    }
}

/// Draws a full dataset: activations, responses and the generating truth.
pub fn gen_dataset(spec: &SynthSpec) -> Result<SynthDataset> {
    spec.validate()?;
    let fpt = spec.frames_per_tr()?;
    let session_lengths = vec![spec.samples_per_session; spec.sessions];
    let session_frames = vec![spec.samples_per_session * fpt; spec.sessions];
    let frames = session_frames.iter().sum::<usize>();
    let n_samples = spec.sessions * spec.samples_per_session;

    let activations: Vec<Array4<f64>> = spec
        .layers
        .iter()
        .enumerate()
        .map(|(i, l)| gen_activations(spec.seed, i, l, frames, spec.smoothing_window))
        .collect();
    let bases: Vec<Array2<f64>> = match spec.response_seed {
        None => activations
            .iter()
            .map(|a| response_basis(spec, a, &session_frames, &session_lengths))
            .collect::<Result<_>>()?,
        Some(alt) => spec
            .layers
            .iter()
            .enumerate()
            .map(|(i, l)| {
                let a = gen_activations(alt, i, l, frames, spec.smoothing_window);
                response_basis(spec, &a, &session_frames, &session_lengths)
            })
            .collect::<Result<_>>()?,
    };

    // Voxel → (representation, share) plan.
    let mut plan: Vec<VoxelPlan> = Vec::with_capacity(spec.voxels);
    if let Some(clusters) = &spec.cluster_plan {
        for entry in clusters {
            let shares: Vec<(usize, f64)> = profile_shares(entry.profile_code)
                .into_iter()
                .map(|((layer, stream), s)| (layer_index(spec, stream, layer), s))
                .collect();
            for _ in 0..entry.voxel_count {
                plan.push((shares.clone(), Some(entry.profile_code)));
            }
        }
        plan.resize(spec.voxels, (Vec::new(), None));
    } else {
        for v in 0..spec.voxels {
            plan.push((vec![(v % spec.layers.len(), 1.0)], None));
        }
    }

    let mut noiseless = Array2::<f64>::zeros((n_samples, spec.voxels));
    let mut responses = Array2::<f64>::zeros((n_samples, spec.voxels));
    let mut truths = Vec::with_capacity(spec.voxels);
    for (v, (shares, code)) in plan.into_iter().enumerate() {
        let mut signal = Array1::<f64>::zeros(n_samples);
        let mut contributions = Vec::with_capacity(shares.len());
        for (li, share) in shares {
            let basis = &bases[li];
            let layer = &spec.layers[li];
            let wstream = CounterStream::new(spec.seed, "weights", &[v as u64, li as u64]);
            let (component, coefficients, pixel_indices) = match spec.signal_basis {
                SignalBasis::ChannelMeans => {
                    let w: Array1<f64> = (0..basis.ncols() as u64)
                        .map(|k| wstream.normal(k))
                        .collect();
                    (basis.dot(&w), w.to_vec(), None)
                }
                SignalBasis::PixelLevel => {
                    let pstream = CounterStream::new(spec.seed, "pixels", &[v as u64, li as u64]);
                    let idx: Vec<usize> = (0..spec.pixels_per_voxel as u64)
                        .map(|k| {
                            ((pstream.uniform(k) * basis.ncols() as f64) as usize)
                                .min(basis.ncols() - 1)
                        })
                        .collect();
                    let w: Vec<f64> = (0..idx.len() as u64).map(|k| wstream.normal(k)).collect();
                    let mut comp = Array1::<f64>::zeros(n_samples);
                    for (&i, &wk) in idx.iter().zip(&w) {
                        comp.scaled_add(wk, &basis.column(i));
                    }
                    (comp, w, Some(idx))
                }
            };
            signal.scaled_add(share.sqrt(), &standardized(component));
            contributions.push(Contribution {
                stream: layer.stream,
                layer: layer.layer,
                share,
                coefficients,
                pixel_indices,
            });
        }

        let nstream = CounterStream::new(spec.seed, "noise", &[v as u64]);
        let noise = || {
            (0..n_samples as u64)
                .map(|t| nstream.normal(t))
                .collect::<Array1<f64>>()
        };
        let observed = if contributions.is_empty() {
            noise()
        } else {
            match spec.snr {
                None => signal.clone(),
                Some(0.0) => noise(),
                Some(snr) => {
                    let mean = signal.sum() / n_samples as f64;
                    let var = signal.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>()
                        / n_samples as f64;
                    &signal + &(noise() * (var / snr).sqrt())
                }
            }
        };
        noiseless.column_mut(v).assign(&signal);
        responses.column_mut(v).assign(&observed);
        truths.push(VoxelTruth {
            voxel: v,
            contributions,
            profile_code: code,
        });
    }

    let n_masked = (spec.mask_fraction * spec.voxels as f64).round() as usize;
    let mask = (0..spec.voxels).map(|v| v < n_masked).collect();
    let responses = VoxelSeries::new(responses, session_lengths, mask)?;
    let activations = spec
        .layers
        .iter()
        .zip(activations)
        .map(|(l, data)| LayerActivationSeries::new(l.stream, l.layer, data, spec.frame_rate))
        .collect::<Result<_>>()?;
    Ok(SynthDataset {
        activations,
        responses,
        truth: GroundTruth {
            voxels: truths,
            noiseless_responses: noiseless,
        },
        session_frames,
        tr_seconds: spec.tr_seconds,
    })
}

/// Writes tensors, ground truth and `manifest.json` into `dir`; returns the
/// manifest path.
pub fn write_dataset(
    dir: impl AsRef<Path>,
    spec: &SynthSpec,
    data: &SynthDataset,
) -> Result<PathBuf> {
    let dir = dir.as_ref();
    let mut entries = Vec::with_capacity(data.activations.len());
    for acts in &data.activations {
        let rel = PathBuf::from(format!("activations/{}.{}.dvft", acts.stream, acts.layer));
        write_tensor(dir.join(&rel), acts.data.view().into_dyn(), Dtype::F32)?;
        entries.push(ActivationEntry {
            stream: acts.stream,
            layer: acts.layer,
            path: rel,
            frame_rate: acts.frame_rate,
            session_frames: data.session_frames.clone(),
        });
    }
    write_tensor(
        dir.join("responses.dvft"),
        data.responses.data.view().into_dyn(),
        Dtype::F64,
    )?;
    write_tensor(
        dir.join("mask.dvft"),
        data.responses.mask_tensor().view().into_dyn(),
        Dtype::F32,
    )?;
    write_tensor(
        dir.join("noiseless_responses.dvft"),
        data.truth.noiseless_responses.view().into_dyn(),
        Dtype::F64,
    )?;
    write_json(dir.join("ground_truth.json"), &data.truth.voxels)?;
    write_json(dir.join("synth_spec.json"), spec)?;
    let manifest = DatasetManifest {
        tr_seconds: data.tr_seconds,
        session_lengths: data.responses.session_lengths.clone(),
        activations: entries,
        responses: "responses.dvft".into(),
        mask: "mask.dvft".into(),
        ground_truth: Some("ground_truth.json".into()),
        root: dir.to_path_buf(),
    };
    let path = dir.join("manifest.json");
    manifest.save(&path)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> SynthSpec {
        SynthSpec {
            seed: 11,
            sessions: 2,
            samples_per_session: 20,
            frame_rate: 1.0,
            tr_seconds: 2.0,
            lag_trs: 2,
            layers: vec![
                LayerSpec {
                    stream: Stream::Rgb,
                    layer: Layer::L1,
                    channels: 4,
                    height: 6,
                    width: 6,
                },
                LayerSpec {
                    stream: Stream::Flow,
                    layer: Layer::L2,
                    channels: 3,
                    height: 4,
                    width: 4,
                },
            ],
            voxels: 6,
            snr: None,
            signal_basis: SignalBasis::ChannelMeans,
            cluster_plan: None,
            smoothing_window: 3,
            mask_fraction: 1.0,
            response_seed: None,
            pixels_per_voxel: 8,
        }
    }

    #[test]
    fn noiseless_responses_match() {
        let d = gen_dataset(&spec()).unwrap();
        assert_eq!(d.responses.data, d.truth.noiseless_responses);
        assert_eq!(d.activations[0].data.dim(), (80, 4, 6, 6));
        assert_eq!(
            d.truth.generating_voxels(Stream::Flow, Layer::L2),
            vec![1, 3, 5]
        );
    }

    #[test]
    fn deterministic() {
        let mut s = spec();
        s.snr = Some(2.0);
        s.signal_basis = SignalBasis::PixelLevel;
        let a = gen_dataset(&s).unwrap();
        let b = gen_dataset(&s).unwrap();
        assert_eq!(a.responses.data, b.responses.data);
        assert_eq!(a.activations[1].data, b.activations[1].data);
        assert_eq!(a.truth, b.truth);
        s.seed = 12;
        assert_ne!(gen_dataset(&s).unwrap().responses.data, a.responses.data);
    }

    #[test]
    fn unit_snr_variance_ratio() {
        let mut s = spec();
        s.sessions = 10;
        s.samples_per_session = 1000;
        s.voxels = 1;
        s.layers.truncate(1);
        s.layers[0].height = 3;
        s.layers[0].width = 3;
        s.snr = Some(1.0);
        let d = gen_dataset(&s).unwrap();
        let signal = d.truth.noiseless_responses.column(0).to_owned();
        let noise = &d.responses.data.column(0) - &signal;
        let ratio = signal.var(0.0) / noise.var(0.0);
        assert!((ratio - 1.0).abs() < 0.1, "{ratio}");
    }

    #[test]
    fn activations_survive_f32_storage() {
        let d = gen_dataset(&spec()).unwrap();
        assert!(d.activations[0].data.iter().all(|&v| v as f32 as f64 == v));
    }

    #[test]
    fn infeasible_cluster_plans() {
        let mut s = spec();
        s.cluster_plan = Some(vec![ClusterPlanEntry {
            profile_code: 1,
            voxel_count: 2,
        }]);
        assert!(gen_dataset(&s)
            .unwrap_err()
            .to_string()
            .contains("infeasible"));
        s.layers = PROFILE_LAYERS
            .iter()
            .map(|&(layer, stream)| LayerSpec {
                stream,
                layer,
                channels: 2,
                height: 3,
                width: 3,
            })
            .collect();
        s.cluster_plan = Some(vec![ClusterPlanEntry {
            profile_code: 9,
            voxel_count: 1,
        }]);
        assert!(gen_dataset(&s).is_err());
        s.cluster_plan = Some(vec![ClusterPlanEntry {
            profile_code: 3,
            voxel_count: 7,
        }]);
        assert!(gen_dataset(&s).is_err());
        s.cluster_plan = Some(vec![ClusterPlanEntry {
            profile_code: 3,
            voxel_count: 4,
        }]);
        let d = gen_dataset(&s).unwrap();
        assert_eq!(d.truth.voxels[0].profile_code, Some(3));
        assert!(d.truth.voxels[5].contributions.is_empty());
    }

    #[test]
    fn shares_sum_to_one_and_separate_contrasts() {
        for code in 0..8u8 {
            let shares = profile_shares(code);
            assert!((shares.iter().map(|s| s.1).sum::<f64>() - 1.0).abs() < 1e-12);
            let get = |l: Layer, st: Stream| {
                shares
                    .iter()
                    .filter(|s| s.0 == (l, st))
                    .map(|s| s.1)
                    .sum::<f64>()
            };
            for (bit, (a, b)) in crate::analysis::parcellation_contrasts().iter().enumerate() {
                let diff = get(a.0, a.1) - get(b.0, b.1);
                assert_eq!(diff > 0.0, code >> bit & 1 == 1, "code {code} bit {bit}");
                assert!(diff.abs() >= 0.24);
            }
        }
    }
}
