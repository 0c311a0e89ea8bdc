use crate::error::{Error, Result};
use crate::types::Sample;
use crate::vector;

/// An immutable labelled sample set.
#[derive(Clone, Debug)]
pub struct Dataset {
    samples: Vec<Sample>,
    num_classes: usize,
    feature_dim: usize,
    name: String,
}

impl Dataset {
    pub fn new(
        name: impl Into<String>,
        samples: Vec<Sample>,
        num_classes: usize,
        feature_dim: usize,
    ) -> Result<Self> {
        if num_classes == 0 {
            return Err(Error::Precondition("a dataset needs at least one class".into()));
        }
        for (i, s) in samples.iter().enumerate() {
            if s.label >= num_classes {
                return Err(Error::Precondition(format!(
                    "sample {i} has label {} >= K = {num_classes}",
                    s.label
                )));
            }
            if s.feature.len() != feature_dim {
                return Err(Error::Dimension {
                    expected: feature_dim,
                    found: s.feature.len(),
                });
            }
            if !vector::all_finite(&s.feature) {
                return Err(Error::Numeric(format!("sample {i} has a non-finite feature")));
            }
        }
        Ok(Self {
            samples,
            num_classes,
            feature_dim,
            name: name.into(),
        })
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn labels(&self) -> impl Iterator<Item = usize> + '_ {
        self.samples.iter().map(|s| s.label)
    }

    pub fn label_histogram(&self) -> Vec<usize> {
        let mut h = vec![0; self.num_classes];
        for l in self.labels() {
            h[l] += 1;
        }
        h
    }

    pub fn is_non_negative(&self) -> bool {
        self.samples
            .iter()
            .all(|s| s.feature.iter().all(|&v| v >= 0.0))
    }

    /// First `n` samples, file order preserved.
    pub fn take(&self, n: usize) -> Dataset {
        self.with_samples(self.samples.iter().take(n).cloned().collect())
    }

    /// The first `per_class` samples of every class, file order preserved.
    /// Errors when some class has fewer samples.
    pub fn balanced_subset(&self, per_class: usize) -> Result<Dataset> {
        let mut seen = vec![0usize; self.num_classes];
        let mut out = Vec::with_capacity(per_class * self.num_classes);
        for s in &self.samples {
            if seen[s.label] < per_class {
                seen[s.label] += 1;
                out.push(s.clone());
            }
        }
        if let Some(k) = seen.iter().position(|&c| c < per_class) {
            return Err(Error::Precondition(format!(
                "class {k} has only {} samples, {per_class} requested",
                seen[k]
            )));
        }
        Ok(self.with_samples(out))
    }

    /// Samples at the shard's indices, in shard order.
    pub fn gather(&self, shard: &Shard) -> Vec<Sample> {
        shard.indices.iter().map(|&i| self.samples[i].clone()).collect()
    }

    fn with_samples(&self, samples: Vec<Sample>) -> Dataset {
        Dataset {
            samples,
            num_classes: self.num_classes,
            feature_dim: self.feature_dim,
            name: self.name.clone(),
        }
    }
}

/// One worker's share of a dataset.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Shard {
    pub owner: usize,
    pub indices: Vec<usize>,
}

impl Shard {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// Mean feature vector `(1/J) Σ_j a_j` of a set of samples.
pub fn mean_feature(samples: &[Sample]) -> Vec<f64> {
    let d = samples.first().map_or(0, |s| s.feature.len());
    vector::mean_of(samples.iter().map(|s| &s.feature), d)
}
