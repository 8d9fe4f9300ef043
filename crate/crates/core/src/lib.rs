//! Voxelwise encoding of brain responses from compressed two-stream video
//! network activations.
//!
//! The pipeline stages are:
//!
//! * [`compression`]: channel-preserving average pooling (APIC), pooling
//!   between channel groups (APBIC) or PCA, then boxcar resampling to the TR;
//! * [`encoder`]: linear-kernel ridge regression with leave-one-session-out
//!   scoring and nested α selection;
//! * [`analysis`]: layer contrasts and the 3-bit sign parcellation;
//! * [`synth`]: deterministic synthetic datasets and brute-force oracles;
//! * [`pipeline`]: configuration and the file-based stage drivers used by the CLI.

pub mod analysis;
pub mod compression;
pub mod encoder;
pub mod error;
pub mod pipeline;
pub mod synth;
pub mod tensor_store;

pub use compression::{DesignMatrix, PcaModel, PoolSpec, Scheme};
pub use encoder::{DualSolution, RidgeConfig, ScoreMap};
pub use error::{Error, Result};
pub use tensor_store::{Dtype, Layer, LayerActivationSeries, Stream, TensorHeader, VoxelSeries};
