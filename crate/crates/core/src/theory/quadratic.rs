//! The two-instance quadratic construction behind the lower bound.
//!
//! Two labels select the costs `f(x; k) = ((1−δ)c/√2)·[x]_k + (L/2)‖x‖²` on
//! `ℝ²`. Instance 1 gives workers `1..R` label 1 and the rest label 2;
//! instance 2 gives workers `1..W−R` label 2 and the rest label 1. Both
//! present the same multiset of `W` local costs, but their regular
//! objectives differ. Worker ids here are 0-based and labels 1/2 are stored
//! as sample labels 0/1.

use std::f64::consts::SQRT_2;

use crate::error::{Error, Result};
use crate::models::LossModel;
use crate::rng::RngStream;
use crate::types::{ModelParams, Sample};

/// The pair of costs `f(·; 1)`, `f(·; 2)` as a [`LossModel`] over `ℝ²`.
/// Features are ignored (one dummy coordinate).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadraticCost {
    pub delta: f64,
    pub c: f64,
    pub l: f64,
}

impl QuadraticCost {
    fn slope(&self) -> f64 {
        (1.0 - self.delta) * self.c / SQRT_2
    }

    pub fn value(&self, x: &[f64], label: usize) -> f64 {
        self.slope() * x[label] + 0.5 * self.l * (x[0] * x[0] + x[1] * x[1])
    }

    pub fn gradient(&self, x: &[f64], label: usize) -> [f64; 2] {
        let mut g = [self.l * x[0], self.l * x[1]];
        g[label] += self.slope();
        g
    }
}

impl LossModel for QuadraticCost {
    fn param_dim(&self) -> usize {
        2
    }

    fn num_classes(&self) -> usize {
        2
    }

    fn feature_dim(&self) -> usize {
        1
    }

    fn logits(&self, _x: &[f64], _feature: &[f64]) -> Result<Vec<f64>> {
        Err(Error::Domain("the quadratic instance is not a classifier".into()))
    }

    fn sample_loss(&self, x: &[f64], s: &Sample) -> Result<f64> {
        Ok(self.value(x, s.label))
    }

    fn sample_gradient_into(&self, x: &[f64], s: &Sample, out: &mut [f64]) -> Result<()> {
        if x.len() != 2 || s.label > 1 {
            return Err(Error::Precondition("quadratic costs live on ℝ² with labels 1 and 2".into()));
        }
        out.copy_from_slice(&self.gradient(x, s.label));
        Ok(())
    }

    fn init_params(&self, _stream: &mut RngStream) -> Result<ModelParams> {
        ModelParams::zeros(2, None)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InstanceId {
    One,
    Two,
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticInstance {
    pub cost: QuadraticCost,
    pub workers: usize,
    pub regular: usize,
    pub id: InstanceId,
}

impl QuadraticInstance {
    /// `δ = 1 − R/W`, which must be below 1/2.
    pub fn new(workers: usize, regular: usize, c: f64, l: f64, id: InstanceId) -> Result<Self> {
        if regular > workers || 2 * regular <= workers {
            return Err(Error::Precondition(format!(
                "the two-instance construction needs W/2 < R <= W, got R={regular} W={workers}"
            )));
        }
        let delta = 1.0 - regular as f64 / workers as f64;
        Ok(Self {
            cost: QuadraticCost { delta, c, l },
            workers,
            regular,
            id,
        })
    }

    /// 0-based label (0 ↔ cost 1, 1 ↔ cost 2) of worker `w` (0-based).
    pub fn label(&self, w: usize) -> usize {
        match self.id {
            InstanceId::One => usize::from(w >= self.regular),
            InstanceId::Two => usize::from(w < self.workers - self.regular),
        }
    }

    /// One-sample shards, one per worker.
    pub fn shards(&self) -> Vec<Vec<Sample>> {
        (0..self.workers)
            .map(|w| vec![Sample::new(vec![0.0], self.label(w))])
            .collect()
    }

    /// Gradient of worker `w`'s cost.
    pub fn quad_gradient(&self, w: usize, x: &[f64]) -> [f64; 2] {
        self.cost.gradient(x, self.label(w))
    }

    /// Gradient of the regular objective `(1/R) Σ_{w<R} f(x; label(w))`.
    pub fn objective_gradient(&self, x: &[f64]) -> [f64; 2] {
        let mut g = [0.0; 2];
        for w in 0..self.regular {
            let gw = self.quad_gradient(w, x);
            g[0] += gw[0];
            g[1] += gw[1];
        }
        [g[0] / self.regular as f64, g[1] / self.regular as f64]
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        (0..self.regular)
            .map(|w| self.cost.value(x, self.label(w)))
            .sum::<f64>()
            / self.regular as f64
    }

    /// Closed-form minimiser of the regular objective.
    pub fn minimizer(&self) -> [f64; 2] {
        let QuadraticCost { delta, c, l } = self.cost;
        match self.id {
            InstanceId::One => [-(1.0 - delta) * c / (SQRT_2 * l), 0.0],
            InstanceId::Two => [
                -(1.0 - 2.0 * delta) * c / (SQRT_2 * l),
                -delta * c / (SQRT_2 * l),
            ],
        }
    }

    /// `(ξ, A)` the construction attains.
    pub fn closed_form_constants(&self) -> (f64, f64) {
        let QuadraticCost { delta, c, .. } = self.cost;
        match self.id {
            InstanceId::One => (0.0, (1.0 - delta) * c),
            InstanceId::Two => ((1.0 - 2.0 * delta).abs().max(delta) * c, delta * c),
        }
    }
}

/// `δ²·min{A², ξ²}/8`.
pub fn lower_bound_value(delta: f64, a: f64, xi: f64) -> f64 {
    delta * delta * (a * a).min(xi * xi) / 8.0
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inst(id: InstanceId) -> QuadraticInstance {
        QuadraticInstance::new(10, 9, 1.0, 1.0, id).unwrap()
    }

    #[test]
    fn label_one_gradient_at_origin() {
        let g = inst(InstanceId::One).quad_gradient(0, &[0.0, 0.0]);
        assert!((g[0] - 0.9 / SQRT_2).abs() < 1e-15);
        assert!((g[0] - 0.636396).abs() < 1e-6);
        assert_eq!(g[1], 0.0);
    }

    #[test]
    fn label_difference_is_constant() {
        let q = inst(InstanceId::One);
        for x in [[0.0, 0.0], [3.0, -1.0], [-0.2, 7.5]] {
            let a = q.cost.gradient(&x, 0);
            let b = q.cost.gradient(&x, 1);
            assert!((a[0] - b[0] - 0.9 / SQRT_2).abs() < 1e-14);
            assert!((a[1] - b[1] + 0.9 / SQRT_2).abs() < 1e-14);
        }
    }

    #[test]
    fn minimisers_zero_the_gradient() {
        for id in [InstanceId::One, InstanceId::Two] {
            let q = inst(id);
            let g = q.objective_gradient(&q.minimizer());
            assert!(g[0].abs() < 1e-15 && g[1].abs() < 1e-15, "{id:?}: {g:?}");
        }
    }

    #[test]
    fn same_multiset_of_costs() {
        let a = inst(InstanceId::One);
        let b = inst(InstanceId::Two);
        let mut la: Vec<_> = (0..10).map(|w| a.label(w)).collect();
        let mut lb: Vec<_> = (0..10).map(|w| b.label(w)).collect();
        assert_ne!(la, lb);
        la.sort();
        lb.sort();
        assert_eq!(la, lb);
    }

    #[test]
    fn lower_bound_examples() {
        assert!((lower_bound_value(0.1, 1.0, 1.0) - 0.00125).abs() < 1e-18);
        assert_eq!(lower_bound_value(0.0, 1.0, 1.0), 0.0);
        assert_eq!(lower_bound_value(0.3, 0.0, 1.0), 0.0);
    }
}
