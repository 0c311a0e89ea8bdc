use rand_distr::{Distribution, Normal};

use super::dataset::Dataset;
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::types::Sample;

/// Gaussian blobs around `K` distinct non-negative class means, clamped to
/// be entry-wise non-negative. Class `k < d` is centred at `3·e_k`; further
/// classes get means drawn uniformly from `[0, 3]^d`.
///
/// Samples are emitted class by class: `per_class` of class 0, then class 1…
pub fn synth_blobs(
    num_classes: usize,
    dim: usize,
    per_class: usize,
    spread: f64,
    stream: &mut RngStream,
) -> Result<Dataset> {
    if num_classes < 2 || dim == 0 || per_class == 0 {
        return Err(Error::Precondition(
            "synthetic blobs need K >= 2, d >= 1 and per_class >= 1".into(),
        ));
    }
    if !(spread >= 0.0 && spread.is_finite()) {
        return Err(Error::Precondition("spread must be a finite non-negative number".into()));
    }
    let means: Vec<Vec<f64>> = (0..num_classes)
        .map(|k| {
            if k < dim {
                let mut m = vec![0.0; dim];
                m[k] = 3.0;
                m
            } else {
                (0..dim).map(|_| 3.0 * stream.uniform()).collect()
            }
        })
        .collect();
    let noise = Normal::new(0.0, 1.0).expect("unit normal");
    let mut samples = Vec::with_capacity(num_classes * per_class);
    for (k, mean) in means.iter().enumerate() {
        for _ in 0..per_class {
            let feature = mean
                .iter()
                .map(|&m| (m + spread * noise.sample(stream)).max(0.0))
                .collect();
            samples.push(Sample::new(feature, k));
        }
    }
    Dataset::new(format!("blobs-k{num_classes}-d{dim}"), samples, num_classes, dim)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{derive_stream, Purpose};

    #[test]
    fn zero_spread_sits_on_means() {
        let mut s = derive_stream(1, 0, Purpose::Synth);
        let d = synth_blobs(2, 2, 3, 0.0, &mut s).unwrap();
        let labels: Vec<_> = d.labels().collect();
        assert_eq!(labels, vec![0, 0, 0, 1, 1, 1]);
        assert_eq!(d.samples()[0].feature, vec![3.0, 0.0]);
        assert_eq!(d.samples()[5].feature, vec![0.0, 3.0]);
    }

    #[test]
    fn deterministic_and_non_negative() {
        let a = synth_blobs(4, 3, 20, 1.0, &mut derive_stream(5, 0, Purpose::Synth)).unwrap();
        let b = synth_blobs(4, 3, 20, 1.0, &mut derive_stream(5, 0, Purpose::Synth)).unwrap();
        assert_eq!(a.samples(), b.samples());
        assert!(a.is_non_negative());
    }

    #[test]
    fn rejects_bad_arguments() {
        let mut s = derive_stream(1, 0, Purpose::Synth);
        assert!(synth_blobs(1, 2, 3, 0.1, &mut s).is_err());
        assert!(synth_blobs(2, 2, 3, -1.0, &mut s).is_err());
    }
}
