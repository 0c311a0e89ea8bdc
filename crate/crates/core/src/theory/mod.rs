//! Executable versions of the constructions behind the lower bounds, and
//! closed-form bound calculators.

mod quadratic;
mod softmax_bounds;

pub use quadratic::{lower_bound_value, InstanceId, QuadraticCost, QuadraticInstance};
pub use softmax_bounds::{softmax_a_bound, softmax_xi_bound, XiBounds};
pub use crate::trainer::{theorem_error_bound, BoundKind, TheoryInputs};

use crate::aggregators::rho_lower_bound;
use crate::error::{Error, Result};

/// Two scalar message sets (as 1-dim vectors) with equal multisets. Regular
/// workers are the first `R` positions of each set.
#[derive(Clone, Debug, PartialEq)]
pub struct IndistinguishablePair {
    pub set1: Vec<Vec<f64>>,
    pub set2: Vec<Vec<f64>>,
    pub regular: usize,
}

/// Build the pair for `W` workers, `R` regular, contraction level `ρ`.
///
/// * `δ ≥ 1/2` (`2R ≤ W`): set 1 is `R` zeros, `R` copies of `ρ+1`, then
///   zeros; set 2 puts the `R` copies of `ρ+1` first.
/// * `δ < 1/2` with `ρ < min{δ/(1−2δ), 1}`: set 1 is `R` zeros then `W−R`
///   ones; set 2 is `W−R` ones then `R` zeros.
pub fn build_indistinguishable_sets(rho: f64, workers: usize, regular: usize) -> Result<IndistinguishablePair> {
    if regular == 0 || regular > workers {
        return Err(Error::Domain("need 1 <= R <= W".into()));
    }
    let scalar = |v: Vec<f64>| v.into_iter().map(|x| vec![x]).collect::<Vec<_>>();
    let delta = 1.0 - regular as f64 / workers as f64;
    if 2 * regular <= workers {
        let high = rho + 1.0;
        let set1 = (0..workers)
            .map(|w| if (regular..2 * regular).contains(&w) { high } else { 0.0 })
            .collect();
        let set2 = (0..workers).map(|w| if w < regular { high } else { 0.0 }).collect();
        return Ok(IndistinguishablePair {
            set1: scalar(set1),
            set2: scalar(set2),
            regular,
        });
    }
    if rho.is_nan() || rho >= rho_lower_bound(delta) {
        return Err(Error::Domain(format!(
            "for δ = {delta} < 1/2 the construction needs ρ < min{{δ/(1−2δ), 1}} = {}, got {rho}",
            rho_lower_bound(delta)
        )));
    }
    let set1 = (0..workers).map(|w| if w < regular { 0.0 } else { 1.0 }).collect();
    let set2 = (0..workers)
        .map(|w| if w < workers - regular { 1.0 } else { 0.0 })
        .collect();
    Ok(IndistinguishablePair {
        set1: scalar(set1),
        set2: scalar(set2),
        regular,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat(v: &[Vec<f64>]) -> Vec<f64> {
        v.iter().map(|x| x[0]).collect()
    }

    #[test]
    fn second_regime_example() {
        let p = build_indistinguishable_sets(0.5, 10, 6).unwrap();
        assert_eq!(flat(&p.set1), vec![0., 0., 0., 0., 0., 0., 1., 1., 1., 1.]);
        assert_eq!(flat(&p.set2), vec![1., 1., 1., 1., 0., 0., 0., 0., 0., 0.]);
        let ybar2: f64 = flat(&p.set2)[..6].iter().sum::<f64>() / 6.0;
        assert!((ybar2 - 0.4 / 0.6).abs() < 1e-15);
    }

    #[test]
    fn first_regime_example() {
        let p = build_indistinguishable_sets(0.25, 10, 4).unwrap();
        assert_eq!(flat(&p.set1), vec![0., 0., 0., 0., 1.25, 1.25, 1.25, 1.25, 0., 0.]);
        assert_eq!(flat(&p.set2), vec![1.25, 1.25, 1.25, 1.25, 0., 0., 0., 0., 0., 0.]);
    }

    #[test]
    fn multisets_agree() {
        for (rho, w, r) in [(0.5, 10, 5), (0.9, 10, 4), (0.5, 10, 7), (0.9, 10, 6)] {
            let p = build_indistinguishable_sets(rho, w, r).unwrap();
            let mut a = flat(&p.set1);
            let mut b = flat(&p.set2);
            a.sort_by(f64::total_cmp);
            b.sort_by(f64::total_cmp);
            assert_eq!(a, b);
        }
    }

    #[test]
    fn rho_above_the_lower_bound_is_rejected() {
        // δ = 0.1: min{0.1/0.8, 1} = 0.125
        assert!(build_indistinguishable_sets(0.2, 10, 9).is_err());
        assert!(build_indistinguishable_sets(0.1, 10, 9).is_ok());
    }
}
