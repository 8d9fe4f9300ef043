//! Binary tensor files, the dataset manifest, and the in-memory series types
//! exchanged between pipeline stages.

mod format;
mod manifest;
mod series;

pub use format::{
    decode_tensor, encode_tensor, read_header, read_tensor, read_tensor_with_header, write_tensor,
    Dtype, TensorHeader, MAGIC, MAX_NDIM, VERSION,
};
pub use manifest::{read_json, write_json, ActivationEntry, DatasetManifest};
pub use series::{session_ranges, Layer, LayerActivationSeries, Stream, VoxelSeries};
