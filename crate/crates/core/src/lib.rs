//! Real-time training of Gaussian RBF networks with selective memory
//! recursive least squares (SMRLS), alongside SGD and forgetting-factor RLS
//! baselines.
//!
//! Modules:
//! - [`rbf`]: grid networks, regressor vectors and outputs.
//! - [`input_space`]: normalization, lattice partitions and the sample memory.
//! - [`estimators`]: SGD, FFRLS and Sherman–Morrison covariance updates.
//! - [`smrls`]: the selective-memory trainer.
//! - [`oracle`]: dense batch least-squares references.

pub mod error;
pub mod estimators;
pub mod input_space;
pub mod oracle;
pub mod rbf;
pub mod smrls;

pub use error::{Error, Result};
pub use estimators::{rank_one_update, Algorithm, EstimatorState, Sign};
pub use input_space::{
    encode_partition, LatestSample, MemoryUpdateRule, Normalizer, PartitionStore, SynthSample,
};
pub use oracle::{batch_oracle_weighted, WeightedSample};
pub use rbf::RbfNetwork;
pub use smrls::{SmrlsState, StepOutcome};
