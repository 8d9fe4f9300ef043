//! Seeded synthetic datasets with known generating structure, and the
//! brute-force oracles the tests compare against.

mod generate;
pub mod oracle;
pub mod rng;

pub use generate::{
    gen_dataset, profile_shares, write_dataset, ClusterPlanEntry, Contribution, GroundTruth,
    LayerSpec, SignalBasis, SynthDataset, SynthSpec, VoxelTruth,
};
pub use oracle::{oracle_covariance_eigen, oracle_pool, oracle_ridge};
pub use rng::CounterStream;
