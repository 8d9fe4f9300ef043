use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2, Array4, ArrayD, Axis, Ix2, Ix4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stream {
    Rgb,
    /// Indexed by stacks of consecutive optical-flow fields, not raw frames.
    Flow,
}

/// Convolutional depth, ordered from lowest (`L1`) to highest abstraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Layer {
    L1,
    L2,
    L3,
    L4,
}

impl Stream {
    pub fn as_str(self) -> &'static str {
        match self {
            Stream::Rgb => "rgb",
            Stream::Flow => "flow",
        }
    }
}

impl Layer {
    pub const ALL: [Layer; 4] = [Layer::L1, Layer::L2, Layer::L3, Layer::L4];

    pub fn as_str(self) -> &'static str {
        match self {
            Layer::L1 => "L1",
            Layer::L2 => "L2",
            Layer::L3 => "L3",
            Layer::L4 => "L4",
        }
    }
}

impl fmt::Display for Stream {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Display for Layer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Stream {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rgb" => Ok(Stream::Rgb),
            "flow" => Ok(Stream::Flow),
            _ => Err(Error::Invalid(format!("unknown stream {s:?}"))),
        }
    }
}

impl FromStr for Layer {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "L1" => Ok(Layer::L1),
            "L2" => Ok(Layer::L2),
            "L3" => Ok(Layer::L3),
            "L4" => Ok(Layer::L4),
            _ => Err(Error::Invalid(format!("unknown layer {s:?}"))),
        }
    }
}

/// Per-frame activations of one layer of one stream, `[frames, C, H, W]`.
#[derive(Debug, Clone)]
pub struct LayerActivationSeries {
    pub stream: Stream,
    pub layer: Layer,
    pub data: Array4<f64>,
    pub frame_rate: f64,
}

impl LayerActivationSeries {
    pub fn new(stream: Stream, layer: Layer, data: Array4<f64>, frame_rate: f64) -> Result<Self> {
        if !(frame_rate.is_finite() && frame_rate > 0.0) {
            return Err(Error::Invalid(format!(
                "frame rate must be positive, got {frame_rate}"
            )));
        }
        if data.is_empty() {
            return Err(Error::Shape("activation tensor is empty".into()));
        }
        Ok(Self {
            stream,
            layer,
            data,
            frame_rate,
        })
    }

    pub fn from_dyn(
        stream: Stream,
        layer: Layer,
        data: ArrayD<f64>,
        frame_rate: f64,
    ) -> Result<Self> {
        let data = data
            .into_dimensionality::<Ix4>()
            .map_err(|_| Error::Shape("activation tensor must be 4-D [T, C, H, W]".into()))?;
        Self::new(stream, layer, data, frame_rate)
    }

    pub fn frames(&self) -> usize {
        self.data.len_of(Axis(0))
    }

    /// `(C, H, W)`.
    pub fn frame_shape(&self) -> (usize, usize, usize) {
        let s = self.data.shape();
        (s[1], s[2], s[3])
    }

    /// Frames `[start, end)` as a new series.
    pub fn slice_frames(&self, start: usize, end: usize) -> Self {
        Self {
            stream: self.stream,
            layer: self.layer,
            data: self
                .data
                .slice(ndarray::s![start..end, .., .., ..])
                .to_owned(),
            frame_rate: self.frame_rate,
        }
    }

    /// Flattens each frame to a row of `C * H * W` raw features.
    pub fn flatten_frames(&self) -> Array2<f64> {
        let (c, h, w) = self.frame_shape();
        self.data
            .to_shape((self.frames(), c * h * w))
            .expect("contiguous reshape")
            .to_owned()
    }
}

/// Voxel responses `[samples, V]` with their session partition and selection mask.
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelSeries {
    pub data: Array2<f64>,
    pub session_lengths: Vec<usize>,
    pub mask: Vec<bool>,
}

impl VoxelSeries {
    pub fn new(data: Array2<f64>, session_lengths: Vec<usize>, mask: Vec<bool>) -> Result<Self> {
        let total: usize = session_lengths.iter().sum();
        if total != data.nrows() {
            return Err(Error::Shape(format!(
                "session lengths sum to {total} but response matrix has {} samples",
                data.nrows()
            )));
        }
        if mask.len() != data.ncols() {
            return Err(Error::Shape(format!(
                "mask has {} entries for {} voxels",
                mask.len(),
                data.ncols()
            )));
        }
        Ok(Self {
            data,
            session_lengths,
            mask,
        })
    }

    pub fn from_dyn(
        data: ArrayD<f64>,
        session_lengths: Vec<usize>,
        mask: ArrayD<f64>,
    ) -> Result<Self> {
        let data = data
            .into_dimensionality::<Ix2>()
            .map_err(|_| Error::Shape("response tensor must be 2-D [samples, voxels]".into()))?;
        if mask.ndim() != 1 {
            return Err(Error::Shape("mask tensor must be 1-D".into()));
        }
        let mask = mask.iter().map(|&m| m != 0.0).collect();
        Self::new(data, session_lengths, mask)
    }

    pub fn n_voxels(&self) -> usize {
        self.data.ncols()
    }

    pub fn n_samples(&self) -> usize {
        self.data.nrows()
    }

    pub fn masked_indices(&self) -> Vec<usize> {
        self.mask
            .iter()
            .enumerate()
            .filter_map(|(i, &m)| m.then_some(i))
            .collect()
    }

    pub fn mask_tensor(&self) -> Array1<f64> {
        self.mask
            .iter()
            .map(|&m| if m { 1.0 } else { 0.0 })
            .collect()
    }
}

/// Maps session lengths to `[start, end)` sample ranges.
pub fn session_ranges(lengths: &[usize]) -> Vec<std::ops::Range<usize>> {
    let mut start = 0;
    lengths
        .iter()
        .map(|&len| {
            let r = start..start + len;
            start += len;
            r
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layer_order_follows_depth() {
        assert!(Layer::L1 < Layer::L2 && Layer::L3 < Layer::L4);
        assert_eq!("L3".parse::<Layer>().unwrap(), Layer::L3);
        assert!("L5".parse::<Layer>().is_err());
        assert_eq!("flow".parse::<Stream>().unwrap(), Stream::Flow);
    }

    #[test]
    fn voxel_series_invariants() {
        let d = Array2::<f64>::zeros((5, 3));
        assert!(VoxelSeries::new(d.clone(), vec![2, 3], vec![true; 3]).is_ok());
        assert!(VoxelSeries::new(d.clone(), vec![2, 2], vec![true; 3]).is_err());
        assert!(VoxelSeries::new(d, vec![5], vec![true; 2]).is_err());
    }

    #[test]
    fn ranges() {
        assert_eq!(session_ranges(&[2, 3, 1]), vec![0..2, 2..5, 5..6]);
    }
}
