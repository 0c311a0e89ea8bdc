use rand::Rng;

use super::{check_sample, log_sum_exp, LossModel};
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::types::{ModelParams, Sample};

pub const MLP_HIDDEN: usize = 50;

/// `d → h → h → K` perceptron with ReLU hidden layers and a softmax
/// cross-entropy head.
///
/// Flat layout: `W1 (h×d), b1, W2 (h×h), b2, W3 (K×h), b3`, weights row-major
/// with one row per output unit.
#[derive(Clone, Debug)]
pub struct Mlp {
    d: usize,
    h: usize,
    k: usize,
}

struct Offsets {
    w1: usize,
    b1: usize,
    w2: usize,
    b2: usize,
    w3: usize,
    b3: usize,
    end: usize,
}

struct Forward {
    z1: Vec<f64>,
    h1: Vec<f64>,
    z2: Vec<f64>,
    h2: Vec<f64>,
    z3: Vec<f64>,
}

fn affine(w: &[f64], b: &[f64], input: &[f64]) -> Vec<f64> {
    w.chunks_exact(input.len())
        .zip(b)
        .map(|(row, bi)| bi + row.iter().zip(input).map(|(a, c)| a * c).sum::<f64>())
        .collect()
}

fn relu(z: &[f64]) -> Vec<f64> {
    z.iter().map(|&v| if v > 0.0 { v } else { 0.0 }).collect()
}

impl Mlp {
    pub fn new(feature_dim: usize, classes: usize) -> Self {
        Self::with_hidden(feature_dim, MLP_HIDDEN, classes)
    }

    pub fn with_hidden(feature_dim: usize, hidden: usize, classes: usize) -> Self {
        assert!(feature_dim >= 1 && hidden >= 1 && classes >= 1);
        Self {
            d: feature_dim,
            h: hidden,
            k: classes,
        }
    }

    pub fn hidden(&self) -> usize {
        self.h
    }

    fn offsets(&self) -> Offsets {
        let (d, h, k) = (self.d, self.h, self.k);
        let w1 = 0;
        let b1 = w1 + h * d;
        let w2 = b1 + h;
        let b2 = w2 + h * h;
        let w3 = b2 + h;
        let b3 = w3 + k * h;
        Offsets {
            w1,
            b1,
            w2,
            b2,
            w3,
            b3,
            end: b3 + k,
        }
    }

    fn forward(&self, x: &[f64], a: &[f64]) -> Forward {
        let o = self.offsets();
        let z1 = affine(&x[o.w1..o.b1], &x[o.b1..o.w2], a);
        let h1 = relu(&z1);
        let z2 = affine(&x[o.w2..o.b2], &x[o.b2..o.w3], &h1);
        let h2 = relu(&z2);
        let z3 = affine(&x[o.w3..o.b3], &x[o.b3..o.end], &h2);
        Forward { z1, h1, z2, h2, z3 }
    }

    /// First-layer activations, exposed for tests of positive homogeneity.
    pub fn hidden_activations(&self, x: &[f64], a: &[f64]) -> Vec<f64> {
        self.forward(x, a).h1
    }
}

impl LossModel for Mlp {
    fn param_dim(&self) -> usize {
        self.offsets().end
    }

    fn num_classes(&self) -> usize {
        self.k
    }

    fn feature_dim(&self) -> usize {
        self.d
    }

    fn logits(&self, x: &[f64], feature: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.param_dim() {
            return Err(Error::Dimension {
                expected: self.param_dim(),
                found: x.len(),
            });
        }
        if feature.len() != self.d {
            return Err(Error::Dimension {
                expected: self.d,
                found: feature.len(),
            });
        }
        Ok(self.forward(x, feature).z3)
    }

    fn sample_gradient_into(&self, x: &[f64], s: &Sample, out: &mut [f64]) -> Result<()> {
        check_sample(self, x, s)?;
        let o = self.offsets();
        let f = self.forward(x, &s.feature);
        let lse = log_sum_exp(&f.z3);
        if !lse.is_finite() || !f.h2.iter().all(|v| v.is_finite()) {
            return Err(Error::Numeric("non-finite activations".into()));
        }
        let dz3: Vec<f64> = f
            .z3
            .iter()
            .enumerate()
            .map(|(k, z)| (z - lse).exp() - if k == s.label { 1.0 } else { 0.0 })
            .collect();

        // output layer
        let mut dh2 = vec![0.0; self.h];
        for (k, &g) in dz3.iter().enumerate() {
            let row = o.w3 + k * self.h;
            for j in 0..self.h {
                out[row + j] = g * f.h2[j];
                dh2[j] += g * x[row + j];
            }
            out[o.b3 + k] = g;
        }

        let dz2: Vec<f64> = dh2
            .iter()
            .zip(&f.z2)
            .map(|(g, z)| if *z > 0.0 { *g } else { 0.0 })
            .collect();
        let mut dh1 = vec![0.0; self.h];
        for (i, &g) in dz2.iter().enumerate() {
            let row = o.w2 + i * self.h;
            for j in 0..self.h {
                out[row + j] = g * f.h1[j];
                dh1[j] += g * x[row + j];
            }
            out[o.b2 + i] = g;
        }

        for (i, (g, z)) in dh1.iter().zip(&f.z1).enumerate() {
            let g = if *z > 0.0 { *g } else { 0.0 };
            let row = o.w1 + i * self.d;
            for (o1, a) in out[row..row + self.d].iter_mut().zip(&s.feature) {
                *o1 = g * a;
            }
            out[o.b1 + i] = g;
        }
        Ok(())
    }

    /// Weights and biases uniform in `±1/√fan_in`.
    fn init_params(&self, stream: &mut RngStream) -> Result<ModelParams> {
        let o = self.offsets();
        let mut x = vec![0.0; o.end];
        let layers = [
            (o.w1, o.w2, self.d),
            (o.w2, o.w3, self.h),
            (o.w3, o.end, self.h),
        ];
        for (start, end, fan_in) in layers {
            let bound = 1.0 / (fan_in as f64).sqrt();
            for v in &mut x[start..end] {
                *v = stream.random_range(-bound..bound);
            }
        }
        ModelParams::new(x)
    }
}
