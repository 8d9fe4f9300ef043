use std::ops::Range;

use ndarray::parallel::prelude::*;
use ndarray::{Array2, ArrayView3, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor_store::LayerActivationSeries;

/// Pooling geometry for one layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoolSpec {
    /// `(h_out, w_out)`: the spatial partition each channel is averaged over.
    pub target_grid: (usize, usize),
    /// Number of contiguous channel groups averaged together (APBIC only).
    pub channel_groups: usize,
}

impl PoolSpec {
    pub fn apic(h_out: usize, w_out: usize) -> Self {
        PoolSpec {
            target_grid: (h_out, w_out),
            channel_groups: 1,
        }
    }

    pub fn apbic(h_out: usize, w_out: usize, channel_groups: usize) -> Self {
        PoolSpec {
            target_grid: (h_out, w_out),
            channel_groups,
        }
    }

    /// Features emitted per frame by APBIC.
    pub fn target_features(&self) -> usize {
        self.channel_groups * self.target_grid.0 * self.target_grid.1
    }

    /// Derives the APBIC group count that yields `target_features` on this grid.
    pub fn for_target_features(
        grid: (usize, usize),
        target_features: usize,
        channels: usize,
    ) -> Result<Self> {
        let cells = grid.0 * grid.1;
        if cells == 0 || !target_features.is_multiple_of(cells) {
            return Err(Error::Invalid(format!(
                "target_features {target_features} not achievable: not a multiple of the {}x{} grid",
                grid.0, grid.1
            )));
        }
        let groups = target_features / cells;
        if groups == 0 || groups > channels {
            return Err(Error::Invalid(format!(
                "target_features {target_features} not achievable: needs {groups} channel groups but layer has {channels} channels"
            )));
        }
        Ok(PoolSpec::apbic(grid.0, grid.1, groups))
    }

    pub fn check_grid(&self, height: usize, width: usize) -> Result<()> {
        let (h_out, w_out) = self.target_grid;
        if h_out == 0 || w_out == 0 {
            return Err(Error::Invalid("target grid must be at least 1x1".into()));
        }
        if h_out > height || w_out > width {
            return Err(Error::Invalid(format!(
                "target grid {h_out}x{w_out} larger than input grid {height}x{width}"
            )));
        }
        Ok(())
    }
}

/// `[start, end)` of cell `i` when `n` positions are split into `parts` cells.
pub fn cell_range(n: usize, parts: usize, i: usize) -> Range<usize> {
    (i * n / parts)..((i + 1) * n / parts)
}

/// Contiguous channel groups of near-equal size.
pub fn channel_group_ranges(channels: usize, groups: usize) -> Vec<Range<usize>> {
    (0..groups)
        .map(|g| cell_range(channels, groups, g))
        .collect()
}

fn pool_frame(frame: ArrayView3<'_, f64>, grid: (usize, usize), out: &mut [f64]) {
    let (channels, height, width) = frame.dim();
    let (h_out, w_out) = grid;
    let rows: Vec<_> = (0..h_out).map(|i| cell_range(height, h_out, i)).collect();
    let cols: Vec<_> = (0..w_out).map(|j| cell_range(width, w_out, j)).collect();
    for c in 0..channels {
        let plane = frame.index_axis(Axis(0), c);
        for (i, rr) in rows.iter().enumerate() {
            for (j, cr) in cols.iter().enumerate() {
                let mut sum = 0.0;
                for y in rr.clone() {
                    let row = plane.row(y);
                    for x in cr.clone() {
                        sum += row[x];
                    }
                }
                out[(c * h_out + i) * w_out + j] = sum / (rr.len() * cr.len()) as f64;
            }
        }
    }
}

/// Average pooling inside channels.
///
/// Output column `(c * h_out + i) * w_out + j` is the mean of channel `c`
/// over spatial cell `(i, j)`; values from different channels never mix.
pub fn apic_compress(acts: &LayerActivationSeries, spec: &PoolSpec) -> Result<Array2<f64>> {
    let (channels, height, width) = acts.frame_shape();
    spec.check_grid(height, width)?;
    let width_out = channels * spec.target_grid.0 * spec.target_grid.1;
    let frames = acts.frames();
    let mut out = Array2::<f64>::zeros((frames, width_out));
    out.axis_iter_mut(Axis(0))
        .into_par_iter()
        .enumerate()
        .for_each(|(f, mut row)| {
            let frame = acts.data.index_axis(Axis(0), f);
            pool_frame(
                frame,
                spec.target_grid,
                row.as_slice_mut().expect("row-major"),
            );
        });
    Ok(out)
}

/// Average pooling inside and between channels: APIC followed by averaging
/// the pooled maps of `channel_groups` contiguous channel groups.
pub fn apbic_compress(acts: &LayerActivationSeries, spec: &PoolSpec) -> Result<Array2<f64>> {
    let (channels, _, _) = acts.frame_shape();
    if spec.channel_groups == 0 || spec.channel_groups > channels {
        return Err(Error::Invalid(format!(
            "target_features {} not achievable: {} channel groups for {channels} channels",
            spec.target_features(),
            spec.channel_groups
        )));
    }
    let pooled = apic_compress(acts, spec)?;
    let cells = spec.target_grid.0 * spec.target_grid.1;
    let groups = channel_group_ranges(channels, spec.channel_groups);
    let mut out = Array2::<f64>::zeros((acts.frames(), spec.target_features()));
    for (src, mut dst) in pooled.axis_iter(Axis(0)).zip(out.axis_iter_mut(Axis(0))) {
        for (g, range) in groups.iter().enumerate() {
            for k in 0..cells {
                let sum: f64 = range.clone().map(|c| src[c * cells + k]).sum();
                dst[g * cells + k] = sum / range.len() as f64;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor_store::{Layer, Stream};
    use ndarray::Array4;

    fn series(data: Array4<f64>) -> LayerActivationSeries {
        LayerActivationSeries::new(Stream::Rgb, Layer::L1, data, 1.0).unwrap()
    }

    #[test]
    fn constant_channel_pools_to_constant() {
        let acts = series(Array4::from_elem((2, 3, 5, 7), 3.0));
        for grid in [(1, 1), (2, 3), (5, 7)] {
            let out = apic_compress(&acts, &PoolSpec::apic(grid.0, grid.1)).unwrap();
            assert!(out.iter().all(|&v| (v - 3.0).abs() < 1e-15));
        }
    }

    #[test]
    fn global_mean() {
        let data = Array4::from_shape_vec((1, 1, 2, 2), vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let out = apic_compress(&series(data), &PoolSpec::apic(1, 1)).unwrap();
        assert_eq!(out[[0, 0]], 2.5);
    }

    #[test]
    fn grid_too_large() {
        let acts = series(Array4::zeros((1, 1, 2, 2)));
        let err = apic_compress(&acts, &PoolSpec::apic(3, 1)).unwrap_err();
        assert!(err.to_string().contains("larger than input grid"));
    }

    #[test]
    fn apbic_duplicate_and_two_channel_means() {
        let mut data = Array4::<f64>::zeros((1, 2, 4, 4));
        for (k, v) in data.iter_mut().enumerate() {
            *v = ((k % 16) as f64).sqrt();
        }
        let acts = series(data);
        let apbic = apbic_compress(&acts, &PoolSpec::apbic(2, 2, 1)).unwrap();
        let apic = apic_compress(&acts, &PoolSpec::apic(2, 2)).unwrap();
        for k in 0..4 {
            assert!((apbic[[0, k]] - apic[[0, k]]).abs() < 1e-15);
        }

        let mut two = Array4::<f64>::ones((1, 2, 3, 3));
        two.index_axis_mut(Axis(1), 1).fill(3.0);
        let out = apbic_compress(&series(two), &PoolSpec::apbic(1, 1, 1)).unwrap();
        assert_eq!(out[[0, 0]], 2.0);
    }

    #[test]
    fn apbic_rejects_unachievable_targets() {
        assert!(PoolSpec::for_target_features((2, 2), 6, 8).is_err());
        assert!(PoolSpec::for_target_features((2, 2), 40, 8).is_err());
        assert_eq!(
            PoolSpec::for_target_features((2, 2), 16, 8)
                .unwrap()
                .channel_groups,
            4
        );
        let acts = series(Array4::zeros((1, 2, 2, 2)));
        assert!(apbic_compress(&acts, &PoolSpec::apbic(1, 1, 3)).is_err());
    }

    #[test]
    fn groups_partition_channels() {
        let g = channel_group_ranges(10, 3);
        assert_eq!(g, vec![0..3, 3..6, 6..10]);
    }
}
