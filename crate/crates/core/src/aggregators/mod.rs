//! Server-side aggregation rules and their contraction constants.
//!
//! Every rule is a pure function of the multiset of messages: sums run in
//! lexicographic message order, TriMean sorts each coordinate and FABA breaks
//! distance ties by message value, so relabelling workers leaves every output
//! bit unchanged.

mod certify;
mod rules;

pub use certify::{certify_contraction, Certificate, Placement};
pub use rules::{cc_agg, clip, faba_agg, mean_agg, trimean_agg};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AggregatorKind {
    Mean,
    Trimean,
    Cc,
    Faba,
}

impl AggregatorKind {
    pub const ALL: [AggregatorKind; 4] = [
        AggregatorKind::Mean,
        AggregatorKind::Trimean,
        AggregatorKind::Cc,
        AggregatorKind::Faba,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AggregatorKind::Mean => "mean",
            AggregatorKind::Trimean => "trimean",
            AggregatorKind::Cc => "cc",
            AggregatorKind::Faba => "faba",
        }
    }
}

impl std::fmt::Display for AggregatorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for AggregatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::config("aggregator.kind", format!("unknown aggregator `{s}`")))
    }
}

/// Where CC starts its clipping iterations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CcStart {
    Zero,
    /// The previous aggregate (zero before the first one exists).
    Previous,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregatorSpec {
    pub kind: AggregatorKind,
    /// The server's belief about `R`; drives TriMean trimming and FABA
    /// removals. Independent of the true regular count.
    pub assumed_regular: usize,
    pub cc_tau: f64,
    pub cc_iters: usize,
    pub cc_start: CcStart,
}

pub const DEFAULT_CC_TAU: f64 = 10.0;

impl AggregatorSpec {
    pub fn new(kind: AggregatorKind, assumed_regular: usize) -> Self {
        Self {
            kind,
            assumed_regular,
            cc_tau: DEFAULT_CC_TAU,
            cc_iters: 1,
            cc_start: CcStart::Previous,
        }
    }

    pub fn mean(workers: usize) -> Self {
        Self::new(AggregatorKind::Mean, workers)
    }

    pub fn trimean(assumed_regular: usize) -> Self {
        Self::new(AggregatorKind::Trimean, assumed_regular)
    }

    pub fn faba(assumed_regular: usize) -> Self {
        Self::new(AggregatorKind::Faba, assumed_regular)
    }

    pub fn cc(tau: f64, iters: usize, start: CcStart) -> Self {
        Self {
            kind: AggregatorKind::Cc,
            assumed_regular: 0,
            cc_tau: tau,
            cc_iters: iters,
            cc_start: start,
        }
    }

    /// Checks the parameters against a message count `W`.
    pub fn validate(&self, workers: usize) -> Result<()> {
        match self.kind {
            AggregatorKind::Mean => Ok(()),
            AggregatorKind::Trimean => {
                let r = self.assumed_regular;
                if r > workers || 2 * r < workers + 1 {
                    return Err(Error::config(
                        "aggregator.assumed_regular",
                        format!("TriMean undefined for δ ≥ 1/2: need 2R − W ≥ 1, got R={r} W={workers}"),
                    ));
                }
                Ok(())
            }
            AggregatorKind::Faba => {
                let r = self.assumed_regular;
                if r == 0 || r > workers {
                    return Err(Error::config(
                        "aggregator.assumed_regular",
                        format!("FABA needs 1 <= R <= W, got R={r} W={workers}"),
                    ));
                }
                Ok(())
            }
            AggregatorKind::Cc => {
                if !(self.cc_tau > 0.0 && self.cc_tau.is_finite()) {
                    return Err(Error::config("aggregator.cc_tau", "must be finite and positive"));
                }
                if self.cc_iters == 0 {
                    return Err(Error::config("aggregator.cc_iters", "need at least one iteration"));
                }
                Ok(())
            }
        }
    }

    /// Apply the rule. `previous` is the last aggregate, used when CC starts
    /// from it.
    pub fn aggregate(&self, messages: &[Vec<f64>], previous: Option<&[f64]>) -> Result<Vec<f64>> {
        match self.kind {
            AggregatorKind::Mean => mean_agg(messages),
            AggregatorKind::Trimean => trimean_agg(messages, self.assumed_regular),
            AggregatorKind::Faba => faba_agg(messages, self.assumed_regular),
            AggregatorKind::Cc => {
                let dim = messages.first().map_or(0, Vec::len);
                let zero = vec![0.0; dim];
                let v0 = match (self.cc_start, previous) {
                    (CcStart::Previous, Some(p)) => p,
                    _ => &zero,
                };
                cc_agg(messages, self.cc_tau, self.cc_iters, v0)
            }
        }
    }
}

/// Analytic contraction constant `ρ` for `kind` at poisoned fraction `δ`.
///
/// TriMean: `(3δ/(1−2δ))·min(√D, √R)` for `δ < 1/2`; one-step CC with the
/// oracle threshold: `√(24δ)` for `δ < 1/2`; FABA: `2δ/(1−3δ)` for
/// `δ < 1/3`. The mean is only robust without poisoned workers (`ρ = 0`).
pub fn rho_formula(kind: AggregatorKind, delta: f64, dim: usize, regular: usize) -> Result<f64> {
    if !(0.0..1.0).contains(&delta) {
        return Err(Error::Domain(format!("δ = {delta} outside [0, 1)")));
    }
    match kind {
        AggregatorKind::Mean => {
            if delta == 0.0 {
                Ok(0.0)
            } else {
                Err(Error::Domain("the mean has no contraction constant for δ > 0".into()))
            }
        }
        AggregatorKind::Trimean => {
            if delta >= 0.5 {
                return Err(Error::Domain(format!("TriMean requires δ < 1/2, got {delta}")));
            }
            let m = (dim.min(regular) as f64).sqrt();
            Ok(3.0 * delta / (1.0 - 2.0 * delta) * m)
        }
        AggregatorKind::Cc => {
            if delta >= 0.5 {
                return Err(Error::Domain(format!("CC requires δ < 1/2, got {delta}")));
            }
            Ok((24.0 * delta).sqrt())
        }
        AggregatorKind::Faba => {
            if delta >= 1.0 / 3.0 {
                return Err(Error::Domain(format!("FABA requires δ < 1/3, got {delta}")));
            }
            Ok(2.0 * delta / (1.0 - 3.0 * delta))
        }
    }
}

/// No aggregator can be `ρ`-robust with `ρ` below `min{δ/(1−2δ), 1}`
/// (taken as 1 for `δ ≥ 1/2`).
pub fn rho_lower_bound(delta: f64) -> f64 {
    if delta >= 0.5 {
        1.0
    } else {
        (delta / (1.0 - 2.0 * delta)).min(1.0)
    }
}

/// `‖a − ȳ‖ / max_{w∈R} ‖y_w − ȳ‖` where `ȳ` averages `messages[i]` for the
/// indices in `regular`. Returns `(deviation, max regular deviation)`.
pub fn contraction_terms(output: &[f64], messages: &[Vec<f64>], regular: &[usize]) -> (f64, f64) {
    let dim = output.len();
    let ybar = crate::vector::mean_of(regular.iter().map(|&i| &messages[i]), dim);
    let dev = crate::vector::distance_unchecked(output, &ybar);
    let spread = regular
        .iter()
        .map(|&i| crate::vector::distance_unchecked(&messages[i], &ybar))
        .fold(0.0, f64::max);
    (dev, spread)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rho_examples() {
        let faba = rho_formula(AggregatorKind::Faba, 0.1, 5, 9).unwrap();
        assert!((faba - 0.2 / 0.7).abs() < 1e-15);
        let cc = rho_formula(AggregatorKind::Cc, 0.1, 5, 9).unwrap();
        assert!((cc - 2.4f64.sqrt()).abs() < 1e-15);
        let tm = rho_formula(AggregatorKind::Trimean, 0.1, 3, 9).unwrap();
        assert!((tm - 0.375 * 3f64.sqrt()).abs() < 1e-15);
        assert_eq!(rho_lower_bound(0.25), 0.5);
        assert_eq!(rho_lower_bound(0.6), 1.0);
    }

    #[test]
    fn rho_thresholds_are_domain_errors() {
        assert!(matches!(
            rho_formula(AggregatorKind::Faba, 1.0 / 3.0, 1, 1),
            Err(Error::Domain(_))
        ));
        assert!(rho_formula(AggregatorKind::Trimean, 0.5, 1, 1).is_err());
        assert!(rho_formula(AggregatorKind::Cc, 0.5, 1, 1).is_err());
        assert!(rho_formula(AggregatorKind::Mean, 0.1, 1, 1).is_err());
        assert_eq!(rho_formula(AggregatorKind::Mean, 0.0, 1, 1).unwrap(), 0.0);
    }

    #[test]
    fn validation() {
        assert!(AggregatorSpec::trimean(5).validate(10).is_err());
        assert!(AggregatorSpec::trimean(6).validate(10).is_ok());
        assert!(AggregatorSpec::faba(0).validate(10).is_err());
        assert!(AggregatorSpec::cc(0.0, 1, CcStart::Zero).validate(10).is_err());
        assert!(AggregatorSpec::cc(1.0, 0, CcStart::Zero).validate(10).is_err());
    }

    #[test]
    fn kind_round_trips_through_str() {
        for k in AggregatorKind::ALL {
            assert_eq!(k.name().parse::<AggregatorKind>().unwrap(), k);
        }
        assert!("krum".parse::<AggregatorKind>().is_err());
    }
}
