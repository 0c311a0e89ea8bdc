//! Step size and momentum from the convergence theorems, and the bounds
//! those theorems give.

use serde::{Deserialize, Serialize};

/// Which convergence result to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    /// A `ρ`-robust aggregator, parameterised by `ρ` and `ξ`.
    Ragg,
    /// The mean, parameterised by `δ` and `A`.
    Mean,
}

/// Inputs to the schedule and the bound. `contraction` is `ρ` for
/// [`BoundKind::Ragg`] and `δ` for [`BoundKind::Mean`]; `spread` is `ξ` or
/// `A` respectively, and `xi` is `ξ` for both.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoryInputs {
    pub kind: BoundKind,
    pub contraction: f64,
    pub spread: f64,
    pub xi: f64,
    pub sigma: f64,
    /// `f(x⁰) − f*`.
    pub f0: f64,
    pub l: f64,
    pub regular: usize,
    pub iterations: usize,
    /// `‖∇f(x⁰)‖`.
    pub grad0_norm: f64,
}

/// `(a, b)` such that `γ = min{√((4F0 + a/(8L)) / (T·40Lσ²·b)), 1/(8L)}`.
fn coefficients(kind: BoundKind, c: f64, sigma: f64, regular: usize) -> (f64, f64) {
    let r = regular as f64;
    let s2 = sigma * sigma;
    match kind {
        BoundKind::Ragg => {
            let q = c * c * (r + 1.0 / r);
            (15.0 * q * s2, 3.0 * q + 2.0 / r)
        }
        BoundKind::Mean => (30.0 * c * c * s2, 6.0 * c * c + 2.0 / r),
    }
}

/// `(γ, α)` with `α = 8Lγ` clamped to at most 1. With `σ = 0` the first
/// branch is infinite and `γ = 1/(8L)`.
pub fn theorem_schedule(
    kind: BoundKind,
    f0: f64,
    l: f64,
    sigma: f64,
    contraction: f64,
    regular: usize,
    iterations: usize,
) -> (f64, f64) {
    let cap = 1.0 / (8.0 * l);
    let (a, b) = coefficients(kind, contraction, sigma, regular);
    let denom = iterations as f64 * 40.0 * l * sigma * sigma * b;
    let gamma = if denom > 0.0 {
        ((4.0 * f0 + a / (8.0 * l)) / denom).sqrt().min(cap)
    } else {
        cap
    };
    (gamma, (8.0 * l * gamma).min(1.0))
}

/// Right-hand side of the complete convergence bound. The final `1/T`
/// term subtracts `‖∇f(x⁰)‖` (not squared), as the statement prints it.
pub fn theorem_error_bound(p: &TheoryInputs) -> f64 {
    let r = p.regular as f64;
    let t = p.iterations as f64;
    let s2 = p.sigma * p.sigma;
    let c2 = p.contraction * p.contraction;
    match p.kind {
        BoundKind::Ragg => {
            let q = c2 * (r + 1.0 / r);
            15.0 * c2 * p.spread * p.spread
                + (20.0 * p.l * s2 * (2.0 / r + 3.0 * q) / t).sqrt()
                    * (32.0 * p.f0 + 15.0 / p.l * q * s2).sqrt()
                + 32.0 * p.l * p.f0 / t
                + 15.0 * q * s2 / t
                + (10.0 * s2 / r + 12.0 * c2 * ((r + 1.0 / r) * s2 + p.xi * p.xi) - p.grad0_norm) / t
        }
        BoundKind::Mean => {
            15.0 * c2 * p.spread * p.spread
                + (20.0 * p.l * s2 * (2.0 / r + 6.0 * c2) / t).sqrt()
                    * (32.0 * p.f0 + 30.0 / p.l * c2 * s2).sqrt()
                + 32.0 * p.l * p.f0 / t
                + 30.0 * c2 * s2 / t
                + (10.0 * s2 / r + 24.0 * c2 * (s2 + p.xi * p.xi) - p.grad0_norm) / t
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_variance_uses_the_cap() {
        let (g, a) = theorem_schedule(BoundKind::Ragg, 1.0, 2.0, 0.0, 0.3, 9, 100);
        assert_eq!(g, 1.0 / 16.0);
        assert_eq!(a, 1.0);
    }

    #[test]
    fn worked_example() {
        // √(4 / (100·40·0.2)) = √0.005
        let (g, a) = theorem_schedule(BoundKind::Ragg, 1.0, 1.0, 1.0, 0.0, 10, 100);
        assert!((g - 0.005f64.sqrt()).abs() < 1e-15);
        assert!((a - 8.0 * 0.005f64.sqrt()).abs() < 1e-14);
        assert!((g - 0.0707).abs() < 1e-4 && (a - 0.566).abs() < 1e-3);
    }

    #[test]
    fn doubling_t_scales_by_root_two() {
        let (g1, _) = theorem_schedule(BoundKind::Mean, 1.0, 1.0, 1.0, 0.1, 9, 1000);
        let (g2, _) = theorem_schedule(BoundKind::Mean, 1.0, 1.0, 1.0, 0.1, 9, 2000);
        assert!((g1 / g2 - 2f64.sqrt()).abs() < 1e-12);
    }

    fn inputs(kind: BoundKind, t: usize) -> TheoryInputs {
        TheoryInputs {
            kind,
            contraction: 0.2,
            spread: 1.5,
            xi: 0.7,
            sigma: 0.9,
            f0: 2.0,
            l: 1.3,
            regular: 9,
            iterations: t,
            grad0_norm: 0.4,
        }
    }

    #[test]
    fn large_t_leaves_the_leading_term() {
        let ragg = theorem_error_bound(&inputs(BoundKind::Ragg, usize::MAX / 2));
        assert!((ragg - 15.0 * 0.04 * 2.25).abs() < 1e-6);
        let mean = theorem_error_bound(&inputs(BoundKind::Mean, usize::MAX / 2));
        assert!((mean - 15.0 * 0.04 * 2.25).abs() < 1e-6);
    }

    #[test]
    fn no_noise_no_contraction() {
        let mut p = inputs(BoundKind::Ragg, 50);
        p.contraction = 0.0;
        p.sigma = 0.0;
        let b = theorem_error_bound(&p);
        assert!((b - (32.0 * 1.3 * 2.0 - 0.4) / 50.0).abs() < 1e-14);
    }
}
