//! Simulator for distributed stochastic momentum under label poisoning.
//!
//! A server holds a global model `x`; `W` workers, `R` of them regular,
//! compute stochastic gradients on their shards and send momenta. The last
//! `W − R` workers train on poisoned labels but otherwise follow the
//! protocol. The server combines the momenta with the mean or a robust
//! aggregator and takes a step.
//!
//! All randomness flows from [`rng::derive_stream`], so a run is a pure
//! function of its configuration and seed.

pub mod aggregators;
pub mod attacks;
pub mod data;
pub mod error;
pub mod models;
pub mod rng;
pub mod theory;
pub mod trainer;
pub mod types;
pub mod vector;

pub use aggregators::{AggregatorKind, AggregatorSpec, CcStart};
pub use attacks::{AttackKind, AttackSpec};
pub use error::{Error, Result};
pub use models::{LossModel, Mlp, Softmax};
pub use rng::{derive_stream, Purpose, RngStream};
pub use trainer::{run, RunOutput, RunRecord, SampleMode, Simulation, TrainConfig};
pub use types::{HyperParams, ModelParams, Sample};
