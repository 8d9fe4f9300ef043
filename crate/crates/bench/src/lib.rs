//! Deterministic inputs shared by the benchmarks.

use ndarray::{Array2, Array4};
use voxelwise_core::synth::CounterStream;
use voxelwise_core::{Layer, LayerActivationSeries, Stream};

pub fn normal_matrix(rows: usize, cols: usize, seed: u64) -> Array2<f64> {
    let s = CounterStream::new(seed, "bench", &[]);
    Array2::from_shape_fn((rows, cols), |(i, j)| s.normal((i * cols + j) as u64))
}

pub fn activations(
    frames: usize,
    c: usize,
    h: usize,
    w: usize,
    seed: u64,
) -> LayerActivationSeries {
    let s = CounterStream::new(seed, "bench-acts", &[]);
    let data = Array4::from_shape_fn((frames, c, h, w), |(f, k, y, x)| {
        s.normal((((f * c + k) * h + y) * w + x) as u64)
    });
    LayerActivationSeries::new(Stream::Rgb, Layer::L1, data, 1.0).expect("valid shape")
}
