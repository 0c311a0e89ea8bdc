//! Dataset ingestion and worker partitioning.

mod dataset;
pub mod idx;
pub mod partition;
mod synth;

pub use dataset::{mean_feature, Dataset, Shard};
pub use idx::{load_idx, load_mnist_dir, Split};
pub use partition::{check_partition, partition_dirichlet, partition_iid, partition_one_class};
pub use synth::synth_blobs;
