use super::{check_sample, log_sum_exp, LossModel};
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::types::{ModelParams, Sample};
use crate::vector;

/// Multinomial logistic regression. `x` holds `K` blocks of length `d`,
/// block `k` scoring class `k` through `x_kᵀa`. No bias term.
#[derive(Clone, Debug)]
pub struct Softmax {
    classes: usize,
    dim: usize,
}

impl Softmax {
    pub fn new(classes: usize, dim: usize) -> Self {
        assert!(classes >= 1 && dim >= 1, "softmax needs K >= 1 and d >= 1");
        Self { classes, dim }
    }

    /// `max_j ‖a_j‖² / 2` over the given samples: a smoothness constant for
    /// the sample losses, since the softmax Hessian in logit space has
    /// spectral norm at most 1/2.
    pub fn smoothness_estimate<'a>(samples: impl IntoIterator<Item = &'a Sample>) -> f64 {
        samples
            .into_iter()
            .map(|s| vector::norm_sq(&s.feature))
            .fold(0.0, f64::max)
            / 2.0
    }
}

impl LossModel for Softmax {
    fn param_dim(&self) -> usize {
        self.classes * self.dim
    }

    fn num_classes(&self) -> usize {
        self.classes
    }

    fn feature_dim(&self) -> usize {
        self.dim
    }

    fn block_dim(&self) -> Option<usize> {
        Some(self.dim)
    }

    fn logits(&self, x: &[f64], feature: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.param_dim() {
            return Err(Error::Dimension {
                expected: self.param_dim(),
                found: x.len(),
            });
        }
        if feature.len() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                found: feature.len(),
            });
        }
        Ok(x
            .chunks_exact(self.dim)
            .map(|xk| vector::dot_unchecked(xk, feature))
            .collect())
    }

    fn sample_gradient_into(&self, x: &[f64], s: &Sample, out: &mut [f64]) -> Result<()> {
        check_sample(self, x, s)?;
        let z = self.logits(x, &s.feature)?;
        let lse = log_sum_exp(&z);
        if !lse.is_finite() {
            return Err(Error::Numeric("non-finite logits".into()));
        }
        for (k, block) in out.chunks_exact_mut(self.dim).enumerate() {
            // block k = (p_k − 1{b=k})·a
            let coef = (z[k] - lse).exp() - if k == s.label { 1.0 } else { 0.0 };
            for (o, a) in block.iter_mut().zip(&s.feature) {
                *o = coef * a;
            }
        }
        debug_assert!(
            vector::norm(out) <= 2.0 * vector::norm(&s.feature) * (1.0 + 1e-12) + 1e-300,
            "sample gradient exceeds 2‖a‖"
        );
        Ok(())
    }

    fn init_params(&self, _stream: &mut RngStream) -> Result<ModelParams> {
        ModelParams::zeros(self.param_dim(), Some(self.dim))
    }
}
