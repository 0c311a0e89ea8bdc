//! Empirical versions of the heterogeneity (`ξ`), disturbance (`A`) and
//! variance (`σ²`) constants at a given model.

use rayon::prelude::*;

use crate::attacks::least_probable;
use crate::error::{Error, Result};
use crate::models::{full_gradient, LossModel};
use crate::types::Sample;
use crate::vector;

/// Full local gradient and exact sampling variance of one shard.
#[derive(Clone, Debug)]
pub struct ShardStats {
    pub gradient: Vec<f64>,
    pub variance: f64,
    pub mean_loss: f64,
}

/// Single pass over the shard with Welford's update, so the per-sample
/// gradients are never stored.
pub fn shard_stats(model: &dyn LossModel, x: &[f64], samples: &[Sample]) -> Result<ShardStats> {
    if samples.is_empty() {
        return Err(Error::config("partition", "statistics of an empty shard"));
    }
    let d = model.param_dim();
    let mut mean = vec![0.0; d];
    let mut g = vec![0.0; d];
    let mut m2 = 0.0;
    let mut loss = 0.0;
    for (j, s) in samples.iter().enumerate() {
        model.sample_gradient_into(x, s, &mut g)?;
        loss += model.sample_loss(x, s)?;
        let k = (j + 1) as f64;
        let mut acc = 0.0;
        for (mi, gi) in mean.iter_mut().zip(&g) {
            let before = gi - *mi;
            *mi += before / k;
            acc += before * (gi - *mi);
        }
        m2 += acc;
    }
    let n = samples.len() as f64;
    Ok(ShardStats {
        gradient: mean,
        variance: (m2 / n).max(0.0),
        mean_loss: loss / n,
    })
}

/// `(1/J) Σ_j ‖∇f_j(x) − ∇f_w(x)‖²` over the whole shard.
pub fn measure_sigma2(model: &dyn LossModel, x: &[f64], samples: &[Sample]) -> Result<f64> {
    Ok(shard_stats(model, x, samples)?.variance)
}

/// Mean of the regular workers' full gradients.
pub fn global_gradient(model: &dyn LossModel, x: &[f64], regular: &[&[Sample]]) -> Result<Vec<f64>> {
    let grads = regular
        .iter()
        .map(|s| full_gradient(model, x, s))
        .collect::<Result<Vec<_>>>()?;
    mean_gradient(&grads, model.param_dim())
}

fn mean_gradient(grads: &[Vec<f64>], dim: usize) -> Result<Vec<f64>> {
    if grads.is_empty() {
        return Err(Error::Precondition("no regular workers".into()));
    }
    Ok(vector::mean_of(grads, dim))
}

fn max_distance(grads: &[Vec<f64>], centre: &[f64]) -> f64 {
    grads
        .iter()
        .map(|g| vector::distance_unchecked(g, centre))
        .fold(0.0, f64::max)
}

/// `max_{w∈R} ‖∇f_w(x) − ∇f(x)‖`.
pub fn measure_xi(model: &dyn LossModel, x: &[f64], regular: &[&[Sample]]) -> Result<f64> {
    let grads = regular
        .iter()
        .map(|s| full_gradient(model, x, s))
        .collect::<Result<Vec<_>>>()?;
    let g = mean_gradient(&grads, model.param_dim())?;
    Ok(max_distance(&grads, &g))
}

/// `max_{w∉R} ‖∇f̃_w(x) − ∇f(x)‖`, or `None` without poisoned workers.
/// Poisoned shards are passed with the labels they train on.
pub fn measure_a(
    model: &dyn LossModel,
    x: &[f64],
    poisoned: &[&[Sample]],
    regular: &[&[Sample]],
) -> Result<Option<f64>> {
    if poisoned.is_empty() {
        return Ok(None);
    }
    let g = global_gradient(model, x, regular)?;
    let grads = poisoned
        .iter()
        .map(|s| full_gradient(model, x, s))
        .collect::<Result<Vec<_>>>()?;
    Ok(Some(max_distance(&grads, &g)))
}

/// The shard as a dynamic-flipping worker would label it against `x`.
pub fn dynamically_flipped(model: &dyn LossModel, x: &[f64], samples: &[Sample]) -> Result<Vec<Sample>> {
    samples
        .iter()
        .map(|s| {
            let p = model.predict_proba(x, &s.feature)?;
            Ok(s.with_label(least_probable(&p, model.num_classes())?))
        })
        .collect()
}

/// Every logged quantity that depends only on `x`.
#[derive(Clone, Debug)]
pub struct Snapshot {
    pub train_loss: f64,
    pub grad_norm_sq: f64,
    pub xi_hat: f64,
    pub a_hat: Option<f64>,
    pub sigma2_hat_max: f64,
}

/// Evaluate all workers (in parallel when `parallel`), then reduce in
/// worker order.
pub(crate) fn snapshot(
    model: &dyn LossModel,
    x: &[f64],
    regular: &[&[Sample]],
    poisoned: &[Vec<Sample>],
    parallel: bool,
) -> Result<Snapshot> {
    let reg_stats: Vec<ShardStats> = if parallel {
        regular.par_iter().map(|s| shard_stats(model, x, s)).collect::<Result<_>>()?
    } else {
        regular.iter().map(|s| shard_stats(model, x, s)).collect::<Result<_>>()?
    };
    let poi_grads: Vec<Vec<f64>> = if parallel {
        poisoned.par_iter().map(|s| full_gradient(model, x, s)).collect::<Result<_>>()?
    } else {
        poisoned.iter().map(|s| full_gradient(model, x, s)).collect::<Result<_>>()?
    };
    let grads: Vec<Vec<f64>> = reg_stats.iter().map(|s| s.gradient.clone()).collect();
    let g = mean_gradient(&grads, model.param_dim())?;
    let train_loss = reg_stats.iter().map(|s| s.mean_loss).sum::<f64>() / reg_stats.len() as f64;
    Ok(Snapshot {
        train_loss,
        grad_norm_sq: vector::norm_sq(&g),
        xi_hat: max_distance(&grads, &g),
        a_hat: (!poi_grads.is_empty()).then(|| max_distance(&poi_grads, &g)),
        sigma2_hat_max: reg_stats.iter().map(|s| s.variance).fold(0.0, f64::max),
    })
}
