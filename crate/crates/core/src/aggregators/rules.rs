use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::vector;

fn dims(messages: &[Vec<f64>]) -> Result<usize> {
    let first = messages
        .first()
        .ok_or_else(|| Error::config("aggregator", "no messages to aggregate"))?;
    let d = first.len();
    for m in messages {
        if m.len() != d {
            return Err(Error::Dimension {
                expected: d,
                found: m.len(),
            });
        }
    }
    Ok(d)
}

/// Mean of the given messages, summed in lexicographic order of the
/// messages so that reordering workers cannot change a single bit.
fn sorted_mean(mut refs: Vec<&Vec<f64>>, d: usize) -> Vec<f64> {
    refs.sort_by(|a, b| lex_cmp(a, b));
    vector::mean_of(refs, d)
}

/// Coordinate-wise arithmetic mean.
pub fn mean_agg(messages: &[Vec<f64>]) -> Result<Vec<f64>> {
    let d = dims(messages)?;
    Ok(sorted_mean(messages.iter().collect(), d))
}

/// Coordinate-wise trimmed mean: per coordinate, drop the `W − R` smallest
/// and `W − R` largest values and average the remaining `2R − W`.
pub fn trimean_agg(messages: &[Vec<f64>], regular: usize) -> Result<Vec<f64>> {
    let d = dims(messages)?;
    let w = messages.len();
    if regular > w || 2 * regular < w + 1 {
        return Err(Error::config(
            "aggregator.assumed_regular",
            format!("TriMean undefined for δ ≥ 1/2 (R={regular}, W={w})"),
        ));
    }
    let cut = w - regular;
    if cut == 0 {
        return mean_agg(messages);
    }
    let keep = w - 2 * cut;
    let inv = 1.0 / keep as f64;
    let mut column: Vec<f64> = Vec::with_capacity(w);
    let mut out = Vec::with_capacity(d);
    for j in 0..d {
        column.clear();
        column.extend(messages.iter().map(|m| m[j]));
        // stable, so equal values stay in message order
        column.sort_by(f64::total_cmp);
        out.push(column[cut..cut + keep].iter().sum::<f64>() * inv);
    }
    Ok(out)
}

/// `v · min(1, τ/‖v‖)`.
pub fn clip(v: &[f64], tau: f64) -> Vec<f64> {
    let n = vector::norm(v);
    if n > tau {
        let s = tau / n;
        v.iter().map(|x| s * x).collect()
    } else {
        v.to_vec()
    }
}

/// Centered clipping: `L` rounds of `v ← v + (1/W) Σ_w CLIP(y_w − v, τ)`
/// from `v0`.
pub fn cc_agg(messages: &[Vec<f64>], tau: f64, iters: usize, v0: &[f64]) -> Result<Vec<f64>> {
    let d = dims(messages)?;
    if v0.len() != d {
        return Err(Error::Dimension {
            expected: d,
            found: v0.len(),
        });
    }
    if tau.is_nan() || tau < 0.0 || iters == 0 {
        return Err(Error::config("aggregator.cc", "need τ >= 0 and L >= 1"));
    }
    let inv = 1.0 / messages.len() as f64;
    let mut order: Vec<&Vec<f64>> = messages.iter().collect();
    order.sort_by(|a, b| lex_cmp(a, b));
    let mut v = v0.to_vec();
    let mut diff = vec![0.0; d];
    for _ in 0..iters {
        let mut correction = vec![0.0; d];
        for &m in &order {
            for ((di, mi), vi) in diff.iter_mut().zip(m).zip(&v) {
                *di = mi - vi;
            }
            let n = vector::norm(&diff);
            let s = if n > tau { tau / n } else { 1.0 };
            for (c, di) in correction.iter_mut().zip(&diff) {
                *c += s * di;
            }
        }
        for (vi, c) in v.iter_mut().zip(&correction) {
            *vi += c * inv;
        }
        if !vector::all_finite(&v) {
            return Err(Error::Numeric("centered clipping produced a non-finite value".into()));
        }
    }
    Ok(v)
}

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

/// FABA: `W − R` times, drop the surviving message farthest from the mean of
/// the survivors; return the mean of the last `R`. Among equally far
/// messages the lexicographically largest goes, so the result depends only
/// on the multiset of messages.
pub fn faba_agg(messages: &[Vec<f64>], regular: usize) -> Result<Vec<f64>> {
    let d = dims(messages)?;
    let w = messages.len();
    if regular == 0 || regular > w {
        return Err(Error::config(
            "aggregator.assumed_regular",
            format!("FABA needs 1 <= R <= W (R={regular}, W={w})"),
        ));
    }
    let mut alive: Vec<usize> = (0..w).collect();
    for _ in 0..(w - regular) {
        let centre = sorted_mean(alive.iter().map(|&i| &messages[i]).collect(), d);
        let mut worst = 0;
        let mut worst_dist = f64::NEG_INFINITY;
        for (slot, &i) in alive.iter().enumerate() {
            let dist = vector::distance_unchecked(&messages[i], &centre);
            let wins = match dist.total_cmp(&worst_dist) {
                Ordering::Greater => true,
                Ordering::Equal => lex_cmp(&messages[i], &messages[alive[worst]]) == Ordering::Greater,
                Ordering::Less => false,
            };
            if wins {
                worst = slot;
                worst_dist = dist;
            }
        }
        alive.remove(worst);
    }
    Ok(sorted_mean(alive.iter().map(|&i| &messages[i]).collect(), d))
}
