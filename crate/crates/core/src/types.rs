use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vector;

/// Flat global model `x`. When `block_dim` is set the vector is viewed as
/// `len / block_dim` consecutive blocks (one per class for softmax).
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    values: Vec<f64>,
    block_dim: Option<usize>,
}

impl ModelParams {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        Self::build(values, None)
    }

    pub fn with_blocks(values: Vec<f64>, block_dim: usize) -> Result<Self> {
        Self::build(values, Some(block_dim))
    }

    pub fn zeros(dim: usize, block_dim: Option<usize>) -> Result<Self> {
        Self::build(vec![0.0; dim], block_dim)
    }

    fn build(values: Vec<f64>, block_dim: Option<usize>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Precondition("model dimension must be positive".into()));
        }
        if !vector::all_finite(&values) {
            return Err(Error::Numeric("model parameters must be finite".into()));
        }
        if let Some(d) = block_dim {
            if d == 0 || !values.len().is_multiple_of(d) {
                return Err(Error::Dimension {
                    expected: d,
                    found: values.len(),
                });
            }
        }
        Ok(Self { values, block_dim })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn block_dim(&self) -> Option<usize> {
        self.block_dim
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }

    /// Block `k`, i.e. `values[k·d .. (k+1)·d]`.
    pub fn block(&self, k: usize) -> Option<&[f64]> {
        let d = self.block_dim?;
        self.values.get(k * d..(k + 1) * d)
    }

    pub fn norm(&self) -> f64 {
        vector::norm(&self.values)
    }

    /// In-place `x ← x − γ·direction`. The caller checks finiteness.
    pub(crate) fn descend(&mut self, gamma: f64, direction: &[f64]) {
        vector::axpy(-gamma, direction, &mut self.values);
    }

    pub(crate) fn is_finite(&self) -> bool {
        vector::all_finite(&self.values)
    }
}

/// One labelled example.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub feature: Vec<f64>,
    pub label: usize,
}

impl Sample {
    pub fn new(feature: Vec<f64>, label: usize) -> Self {
        Self { feature, label }
    }

    pub fn with_label(&self, label: usize) -> Self {
        Self {
            feature: self.feature.clone(),
            label,
        }
    }
}

/// Algorithm-level hyper-parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HyperParams {
    pub workers: usize,
    pub regular: usize,
    pub iterations: usize,
    pub gamma: f64,
    pub alpha: f64,
    pub seed: u64,
}

impl HyperParams {
    pub fn validate(&self) -> Result<()> {
        if self.workers == 0 {
            return Err(Error::config("hyper.workers", "need at least one worker"));
        }
        if self.regular == 0 || self.regular > self.workers {
            return Err(Error::config(
                "hyper.regular",
                format!("need 1 <= R <= W, got R={} W={}", self.regular, self.workers),
            ));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::config("hyper.gamma", "step size must be positive"));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::config("hyper.alpha", "momentum coefficient must lie in [0, 1]"));
        }
        Ok(())
    }

    /// Fraction of poisoned workers `δ = 1 − R/W`.
    pub fn delta(&self) -> f64 {
        1.0 - self.regular as f64 / self.workers as f64
    }

    pub fn num_poisoned(&self) -> usize {
        self.workers - self.regular
    }
}
