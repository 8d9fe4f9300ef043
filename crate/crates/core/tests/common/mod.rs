#![allow(dead_code)]

use std::path::{Path, PathBuf};

use ndarray::{Array2, Array4};
use voxelwise_core::pipeline::PipelineConfig;
use voxelwise_core::synth::{ClusterPlanEntry, CounterStream, LayerSpec, SignalBasis, SynthSpec};
use voxelwise_core::{Layer, Stream};

pub fn normal_matrix(rows: usize, cols: usize, seed: u64) -> Array2<f64> {
    let s = CounterStream::new(seed, "test-matrix", &[rows as u64, cols as u64]);
    Array2::from_shape_fn((rows, cols), |(i, j)| s.normal((i * cols + j) as u64))
}

pub fn normal_tensor(shape: (usize, usize, usize, usize), seed: u64) -> Array4<f64> {
    let s = CounterStream::new(seed, "test-tensor", &[]);
    let (_, c, h, w) = shape;
    Array4::from_shape_fn(shape, |(f, k, y, x)| {
        s.normal((((f * c + k) * h + y) * w + x) as u64)
    })
}

pub fn layer(stream: Stream, layer: Layer, c: usize, h: usize, w: usize) -> LayerSpec {
    LayerSpec {
        stream,
        layer,
        channels: c,
        height: h,
        width: w,
    }
}

pub fn base_spec(
    seed: u64,
    sessions: usize,
    samples: usize,
    layers: Vec<LayerSpec>,
    voxels: usize,
) -> SynthSpec {
    SynthSpec {
        seed,
        sessions,
        samples_per_session: samples,
        frame_rate: 1.0,
        tr_seconds: 2.0,
        lag_trs: 2,
        layers,
        voxels,
        snr: None,
        signal_basis: SignalBasis::ChannelMeans,
        cluster_plan: None,
        smoothing_window: 3,
        mask_fraction: 1.0,
        response_seed: None,
        pixels_per_voxel: 8,
    }
}

/// Writes `spec` under `root/data` and returns a config writing to `root/out`.
pub fn dataset(root: &Path, spec: &SynthSpec) -> PipelineConfig {
    let manifest = voxelwise_core::pipeline::run_synth(spec, root.join("data")).unwrap();
    PipelineConfig::new(manifest, root.join("out"))
}

pub fn profile_layers(c: usize, hw: usize) -> Vec<LayerSpec> {
    vec![
        layer(Stream::Rgb, Layer::L2, c, hw, hw),
        layer(Stream::Rgb, Layer::L4, c, hw, hw),
        layer(Stream::Flow, Layer::L1, c, hw, hw),
        layer(Stream::Flow, Layer::L2, c, hw, hw),
        layer(Stream::Flow, Layer::L4, c, hw, hw),
    ]
}

pub fn plan(entries: &[(u8, usize)]) -> Option<Vec<ClusterPlanEntry>> {
    Some(
        entries
            .iter()
            .map(|&(profile_code, voxel_count)| ClusterPlanEntry {
                profile_code,
                voxel_count,
            })
            .collect(),
    )
}

/// Every file under `dir`, relative path and contents, sorted.
pub fn snapshot(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((
                    p.strip_prefix(dir).unwrap().to_path_buf(),
                    std::fs::read(&p).unwrap(),
                ));
            }
        }
    }
    out.sort();
    out
}
