//! Data-dependent bounds on `A` and `ξ` for softmax regression with
//! non-negative features.

use crate::data::mean_feature;
use crate::error::{Error, Result};
use crate::types::Sample;
use crate::vector;

fn max_mean_feature_norm(shards: &[&[Sample]]) -> Result<f64> {
    let mut best = 0.0f64;
    for (w, shard) in shards.iter().enumerate() {
        for (j, s) in shard.iter().enumerate() {
            if let Some(i) = s.feature.iter().position(|&v| v < 0.0) {
                return Err(Error::Precondition(format!(
                    "worker {w}, sample {j}: feature entry {i} is negative"
                )));
            }
        }
        if !shard.is_empty() {
            best = best.max(vector::norm(&mean_feature(shard)));
        }
    }
    Ok(best)
}

/// `2√K · max_w ‖(1/J) Σ_j a^{(w,j)}‖` over all workers.
pub fn softmax_a_bound(all_shards: &[&[Sample]], num_classes: usize) -> Result<f64> {
    Ok(2.0 * (num_classes as f64).sqrt() * max_mean_feature_norm(all_shards)?)
}

/// Upper and lower bounds on `ξ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct XiBounds {
    /// `2√K · max_{w∈R} ‖mean feature‖`.
    pub upper: f64,
    /// `(1 − 1/R)(1 − 1/K) · max_{w∈R} ‖mean feature‖`. Only valid when each
    /// regular worker holds exactly one class and no two share a class.
    pub het_lower: f64,
}

pub fn softmax_xi_bound(regular_shards: &[&[Sample]], num_classes: usize) -> Result<XiBounds> {
    let m = max_mean_feature_norm(regular_shards)?;
    let r = regular_shards.len() as f64;
    let k = num_classes as f64;
    Ok(XiBounds {
        upper: 2.0 * k.sqrt() * m,
        het_lower: (1.0 - 1.0 / r) * (1.0 - 1.0 / k) * m,
    })
}
