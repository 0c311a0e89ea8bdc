//! Label poisoning. Attacks only ever rewrite labels; features are untouched
//! and poisoned workers run the same training code as regular ones.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::LossModel;
use crate::rng::RngStream;
use crate::types::Sample;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackKind {
    None,
    StaticFlip,
    DynamicFlip,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackSpec {
    pub kind: AttackKind,
    /// Per-sample flip probability for static flipping. Dynamic flipping
    /// always rewrites every drawn label.
    pub flip_prob: f64,
}

impl AttackSpec {
    pub fn none() -> Self {
        Self {
            kind: AttackKind::None,
            flip_prob: 0.0,
        }
    }

    pub fn static_flip(p: f64) -> Self {
        Self {
            kind: AttackKind::StaticFlip,
            flip_prob: p,
        }
    }

    pub fn dynamic_flip() -> Self {
        Self {
            kind: AttackKind::DynamicFlip,
            flip_prob: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.flip_prob) {
            return Err(Error::config("attack.flip_prob", "must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// `b ↦ K − 1 − b`. An involution; for odd `K` the middle class is fixed.
pub fn static_flip(label: usize, num_classes: usize) -> usize {
    debug_assert!(label < num_classes);
    num_classes - 1 - label
}

/// Flip each label independently with probability `p`, once.
pub fn apply_static_poisoning(
    samples: &[Sample],
    num_classes: usize,
    p: f64,
    stream: &mut RngStream,
) -> Vec<Sample> {
    samples
        .iter()
        .map(|s| {
            // always consume one draw per sample so outcomes line up across p
            let u = stream.uniform();
            if u < p {
                s.with_label(static_flip(s.label, num_classes))
            } else {
                s.clone()
            }
        })
        .collect()
}

/// Least probable class; ties go to the smallest index.
pub fn least_probable(probabilities: &[f64], num_classes: usize) -> Result<usize> {
    if probabilities.len() != num_classes {
        return Err(Error::Numeric(format!(
            "predictor returned {} probabilities for K = {num_classes}",
            probabilities.len()
        )));
    }
    let mut best = 0;
    for (k, &p) in probabilities.iter().enumerate() {
        if !p.is_finite() {
            return Err(Error::Numeric(format!("non-finite probability for class {k}")));
        }
        if p < probabilities[best] {
            best = k;
        }
    }
    Ok(best)
}

/// Label the sample with the class the current global model finds least
/// probable.
pub fn dynamic_flip(sample: &Sample, x: &[f64], model: &dyn LossModel) -> Result<usize> {
    let p = model.predict_proba(x, &sample.feature)?;
    least_probable(&p, model.num_classes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::Softmax;
    use crate::rng::{derive_stream, Purpose};

    #[test]
    fn static_flip_examples() {
        assert_eq!(static_flip(3, 10), 6);
        assert_eq!(static_flip(9, 10), 0);
        assert_eq!(static_flip(0, 2), 1);
        assert_eq!(static_flip(1, 3), 1);
        for b in 0..10 {
            assert_eq!(static_flip(static_flip(b, 10), 10), b);
        }
    }

    fn samples(labels: &[usize]) -> Vec<Sample> {
        labels.iter().map(|&l| Sample::new(vec![l as f64, 1.0], l)).collect()
    }

    #[test]
    fn p_zero_is_identity() {
        let s = samples(&[0, 5, 9, 3]);
        let out = apply_static_poisoning(&s, 10, 0.0, &mut derive_stream(1, 0, Purpose::Poison));
        assert_eq!(out, s);
    }

    #[test]
    fn p_one_flips_all_and_keeps_features() {
        let s = samples(&[0, 5, 9]);
        let out = apply_static_poisoning(&s, 10, 1.0, &mut derive_stream(1, 0, Purpose::Poison));
        let labels: Vec<_> = out.iter().map(|s| s.label).collect();
        assert_eq!(labels, vec![9, 4, 0]);
        for (a, b) in out.iter().zip(&s) {
            assert_eq!(a.feature, b.feature);
        }
    }

    #[test]
    fn half_probability_flips_about_half() {
        let s = samples(&vec![1; 10_000]);
        let out = apply_static_poisoning(&s, 10, 0.5, &mut derive_stream(3, 0, Purpose::Poison));
        let flipped = out.iter().filter(|s| s.label != 1).count() as f64 / 1e4;
        assert!((0.47..=0.53).contains(&flipped), "{flipped}");
    }

    #[test]
    fn argmin_with_smallest_index_ties() {
        assert_eq!(least_probable(&[0.7, 0.2, 0.1], 3).unwrap(), 2);
        assert_eq!(least_probable(&[0.1, 0.1, 0.8], 3).unwrap(), 0);
        assert!(least_probable(&[0.5, 0.5], 3).is_err());
        assert!(least_probable(&[f64::NAN, 0.5, 0.5], 3).is_err());
    }

    #[test]
    fn uniform_model_flips_to_class_zero() {
        let m = Softmax::new(4, 3);
        let x = vec![0.0; 12];
        let s = Sample::new(vec![0.3, 0.1, 0.9], 2);
        assert_eq!(dynamic_flip(&s, &x, &m).unwrap(), 0);
    }
}
