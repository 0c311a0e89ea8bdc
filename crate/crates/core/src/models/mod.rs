//! Loss models consumed by the trainer.
//!
//! Parameters travel as flat `&[f64]` slices; [`crate::types::ModelParams`]
//! is only the owning wrapper. Every model here is a classifier whose loss is
//! softmax cross-entropy over some logit map, except the quadratic instances
//! in [`crate::theory`], which override `sample_loss` and have no logits.

mod mlp;
mod softmax;

pub use mlp::{Mlp, MLP_HIDDEN};
pub use softmax::Softmax;

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::types::{ModelParams, Sample};

pub trait LossModel: Send + Sync {
    fn param_dim(&self) -> usize;
    fn num_classes(&self) -> usize;
    fn feature_dim(&self) -> usize;

    /// Block size for [`ModelParams::with_blocks`], if the parameter vector
    /// has a per-class block layout.
    fn block_dim(&self) -> Option<usize> {
        None
    }

    fn logits(&self, x: &[f64], feature: &[f64]) -> Result<Vec<f64>>;

    /// Writes `∇f(x; s)` into `out` (overwriting it).
    fn sample_gradient_into(&self, x: &[f64], s: &Sample, out: &mut [f64]) -> Result<()>;

    fn init_params(&self, stream: &mut RngStream) -> Result<ModelParams>;

    /// Cross-entropy `log Σ exp z_l − z_b`.
    fn sample_loss(&self, x: &[f64], s: &Sample) -> Result<f64> {
        let z = self.logits(x, &s.feature)?;
        let loss = log_sum_exp(&z) - z[s.label];
        if !loss.is_finite() {
            return Err(Error::Numeric("non-finite loss".into()));
        }
        Ok(loss)
    }

    fn sample_gradient(&self, x: &[f64], s: &Sample) -> Result<Vec<f64>> {
        let mut g = vec![0.0; self.param_dim()];
        self.sample_gradient_into(x, s, &mut g)?;
        Ok(g)
    }

    fn predict_proba(&self, x: &[f64], feature: &[f64]) -> Result<Vec<f64>> {
        let z = self.logits(x, feature)?;
        if !z.iter().all(|v| v.is_finite()) {
            return Err(Error::Numeric("non-finite logits".into()));
        }
        Ok(softmax(&z))
    }

    fn predict(&self, x: &[f64], feature: &[f64]) -> Result<usize> {
        let z = self.logits(x, feature)?;
        Ok(argmax(&z))
    }
}

/// `log Σ exp z` with max subtraction.
pub fn log_sum_exp(z: &[f64]) -> f64 {
    let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

pub fn softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// First index of the maximum.
pub fn argmax(z: &[f64]) -> usize {
    let mut best = 0;
    for (k, &v) in z.iter().enumerate() {
        if v > z[best] {
            best = k;
        }
    }
    best
}

/// `(1/J) Σ_j ∇f(x; s_j)`, summed in shard order.
pub fn full_gradient(model: &dyn LossModel, x: &[f64], samples: &[Sample]) -> Result<Vec<f64>> {
    if samples.is_empty() {
        return Err(Error::config("partition", "full gradient of an empty shard"));
    }
    let mut acc = vec![0.0; model.param_dim()];
    let mut g = vec![0.0; model.param_dim()];
    for s in samples {
        model.sample_gradient_into(x, s, &mut g)?;
        for (a, v) in acc.iter_mut().zip(&g) {
            *a += v;
        }
    }
    let inv = 1.0 / samples.len() as f64;
    for a in &mut acc {
        *a *= inv;
    }
    Ok(acc)
}

/// Mean loss over `samples`.
pub fn mean_loss(model: &dyn LossModel, x: &[f64], samples: &[Sample]) -> Result<f64> {
    if samples.is_empty() {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for s in samples {
        total += model.sample_loss(x, s)?;
    }
    Ok(total / samples.len() as f64)
}

/// Fraction of samples whose top logit matches the label.
pub fn accuracy(model: &dyn LossModel, x: &[f64], samples: &[Sample]) -> Result<f64> {
    if samples.is_empty() {
        return Ok(f64::NAN);
    }
    let mut hits = 0usize;
    for s in samples {
        if model.predict(x, &s.feature)? == s.label {
            hits += 1;
        }
    }
    Ok(hits as f64 / samples.len() as f64)
}

pub(crate) fn check_sample(model: &dyn LossModel, x: &[f64], s: &Sample) -> Result<()> {
    if x.len() != model.param_dim() {
        return Err(Error::Dimension {
            expected: model.param_dim(),
            found: x.len(),
        });
    }
    if s.feature.len() != model.feature_dim() {
        return Err(Error::Dimension {
            expected: model.feature_dim(),
            found: s.feature.len(),
        });
    }
    if s.label >= model.num_classes() {
        return Err(Error::Precondition(format!(
            "label {} >= K = {}",
            s.label,
            model.num_classes()
        )));
    }
    Ok(())
}
