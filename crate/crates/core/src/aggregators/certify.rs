//! Randomised search for contraction violations.
//!
//! Each trial draws a cloud of regular messages and places the poisoned ones
//! with one of three heuristics. The search is sound (every reported ratio
//! was actually attained) but not exhaustive.

use rand::seq::SliceRandom;

use super::{cc_agg, contraction_terms, AggregatorKind, AggregatorSpec};
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::vector;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Placement {
    /// All poisoned messages at one point far from `ȳ`.
    FarPoint,
    /// Poisoned messages at `−κ·ȳ`.
    OppositeOfMean,
    /// Poisoned messages on or just beyond the most extreme regular message
    /// (or the coordinate-wise extreme of the regular cloud).
    ClusterAtExtreme,
}

const PLACEMENTS: [Placement; 3] = [
    Placement::FarPoint,
    Placement::OppositeOfMean,
    Placement::ClusterAtExtreme,
];

/// Per-trial `(‖agg − ȳ‖, max_{w∈R}‖y_w − ȳ‖)` pairs.
#[derive(Clone, Debug, Default)]
pub struct Certificate {
    pub trials: Vec<(f64, f64, Placement)>,
    pub skipped: usize,
}

impl Certificate {
    pub fn max_ratio(&self) -> f64 {
        self.trials
            .iter()
            .map(|&(dev, spread, _)| dev / spread)
            .fold(0.0, f64::max)
    }

    /// Trials with `dev > ρ·spread + tol`.
    pub fn violations(&self, rho: f64, tol: f64) -> usize {
        self.trials
            .iter()
            .filter(|&&(dev, spread, _)| dev > rho * spread + tol)
            .count()
    }

    pub fn worst(&self) -> Option<(f64, Placement)> {
        self.trials
            .iter()
            .map(|&(dev, spread, p)| (dev / spread, p))
            .fold(None, |best: Option<(f64, Placement)>, cur| match best {
                Some(b) if b.0 >= cur.0 => Some(b),
                _ => Some(cur),
            })
    }
}

fn unit(dim: usize, stream: &mut RngStream) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| 2.0 * stream.uniform() - 1.0).collect();
        let n = vector::norm(&v);
        if n > 1e-6 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

/// Run `trials` adversarial trials with `W` messages of which `R` regular.
///
/// CC is evaluated in the regime where its contraction is proven: one step,
/// `v0` within `max_{w∈R}‖y_w − ȳ‖` of `ȳ` and the oracle threshold
/// `τ = √(4(1−δ)·max‖y_w − ȳ‖²/δ)`. Trials whose regular spread is below
/// `1e-12` are skipped.
pub fn certify_contraction(
    spec: &AggregatorSpec,
    trials: usize,
    workers: usize,
    regular: usize,
    dim: usize,
    stream: &mut RngStream,
) -> Result<Certificate> {
    if trials == 0 || dim == 0 || regular == 0 || regular > workers {
        return Err(Error::Precondition(
            "certification needs trials, dim >= 1 and 1 <= R <= W".into(),
        ));
    }
    let delta = 1.0 - regular as f64 / workers as f64;
    let mut cert = Certificate::default();
    for trial in 0..trials {
        let placement = PLACEMENTS[trial % PLACEMENTS.len()];

        let centre: Vec<f64> = (0..dim).map(|_| 20.0 * stream.uniform() - 10.0).collect();
        let scale = 10f64.powf(3.0 * stream.uniform() - 2.0);
        let stretch: Vec<f64> = (0..dim).map(|_| 0.1 + stream.uniform()).collect();
        let regulars: Vec<Vec<f64>> = (0..regular)
            .map(|_| {
                (0..dim)
                    .map(|j| centre[j] + scale * stretch[j] * (2.0 * stream.uniform() - 1.0))
                    .collect()
            })
            .collect();
        let ybar = vector::mean_of(&regulars, dim);
        let far = regulars
            .iter()
            .max_by(|a, b| {
                vector::distance_unchecked(a, &ybar).total_cmp(&vector::distance_unchecked(b, &ybar))
            })
            .expect("R >= 1")
            .clone();
        let spread = vector::distance_unchecked(&far, &ybar);

        let poisoned: Vec<Vec<f64>> = (0..workers - regular)
            .map(|_| match placement {
                Placement::FarPoint => {
                    let m = spread * 10f64.powf(3.0 * stream.uniform());
                    let u = unit(dim, stream);
                    ybar.iter().zip(&u).map(|(y, u)| y + m * u).collect()
                }
                Placement::OppositeOfMean => {
                    let k = 0.5 + 4.5 * stream.uniform();
                    ybar.iter().map(|y| -k * y).collect()
                }
                Placement::ClusterAtExtreme => {
                    let eps = stream.uniform();
                    if stream.uniform() < 0.5 {
                        far.iter().zip(&ybar).map(|(f, y)| f + eps * (f - y)).collect()
                    } else {
                        (0..dim)
                            .map(|j| {
                                let hi = regulars.iter().map(|r| r[j]).fold(f64::MIN, f64::max);
                                hi + eps * scale
                            })
                            .collect()
                    }
                }
            })
            .collect();

        // random interleaving of regular and poisoned messages
        let mut order: Vec<usize> = (0..workers).collect();
        order.shuffle(stream);
        let mut messages = vec![Vec::new(); workers];
        let mut regular_idx = Vec::with_capacity(regular);
        for (src, &pos) in order.iter().enumerate() {
            if src < regular {
                messages[pos] = regulars[src].clone();
                regular_idx.push(pos);
            } else {
                messages[pos] = poisoned[src - regular].clone();
            }
        }

        if spread < 1e-12 {
            cert.skipped += 1;
            continue;
        }
        let out = if spec.kind == AggregatorKind::Cc {
            let r = spread * stream.uniform();
            let u = unit(dim, stream);
            let v0: Vec<f64> = ybar.iter().zip(&u).map(|(y, u)| y + r * u).collect();
            let tau = (4.0 * (1.0 - delta) * spread * spread / delta).sqrt();
            let tau = if tau.is_finite() { tau } else { f64::MAX };
            cc_agg(&messages, tau, 1, &v0)?
        } else {
            spec.aggregate(&messages, None)?
        };
        let (dev, spread) = contraction_terms(&out, &messages, &regular_idx);
        cert.trials.push((dev, spread, placement));
    }
    Ok(cert)
}
