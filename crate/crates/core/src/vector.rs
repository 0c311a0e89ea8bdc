//! Dense `f64` vector arithmetic.
//!
//! The checked functions return [`Error::Dimension`] on length mismatch. The
//! `*_into` / `axpy` helpers are the unchecked hot-path variants used by the
//! trainer and aggregators, which validate shapes once up front.

use crate::error::{Error, Result};

fn check(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::Dimension {
            expected: a.len(),
            found: b.len(),
        });
    }
    Ok(())
}

pub fn add(a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    check(a, b)?;
    Ok(a.iter().zip(b).map(|(x, y)| x + y).collect())
}

pub fn sub(a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    check(a, b)?;
    Ok(a.iter().zip(b).map(|(x, y)| x - y).collect())
}

pub fn scale(a: &[f64], c: f64) -> Vec<f64> {
    a.iter().map(|x| c * x).collect()
}

pub fn dot(a: &[f64], b: &[f64]) -> Result<f64> {
    check(a, b)?;
    Ok(dot_unchecked(a, b))
}

/// Euclidean norm.
pub fn norm(a: &[f64]) -> f64 {
    norm_sq(a).sqrt()
}

pub fn norm_sq(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum()
}

/// `‖a − b‖`.
pub fn distance(a: &[f64], b: &[f64]) -> Result<f64> {
    check(a, b)?;
    Ok(distance_unchecked(a, b))
}

#[inline]
pub(crate) fn dot_unchecked(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub(crate) fn distance_unchecked(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// `y += c * x`.
#[inline]
pub(crate) fn axpy(c: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += c * xi;
    }
}

/// Coordinate-wise arithmetic mean of equally sized vectors, summed in the
/// given order.
pub(crate) fn mean_of<'a, I>(vectors: I, dim: usize) -> Vec<f64>
where
    I: IntoIterator<Item = &'a Vec<f64>>,
{
    let mut out = vec![0.0; dim];
    let mut n = 0usize;
    for v in vectors {
        for (o, x) in out.iter_mut().zip(v) {
            *o += x;
        }
        n += 1;
    }
    if n > 0 {
        let inv = 1.0 / n as f64;
        for o in &mut out {
            *o *= inv;
        }
    }
    out
}

pub(crate) fn all_finite(a: &[f64]) -> bool {
    a.iter().all(|x| x.is_finite())
}
