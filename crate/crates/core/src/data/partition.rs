//! Heterogeneity partitioners: i.i.d., per-class Dirichlet and one class
//! per worker. Every partition returns `W` disjoint shards of equal size `J`.

use rand::seq::SliceRandom;
use rand_distr::{Distribution, Gamma};

use super::dataset::{Dataset, Shard};
use crate::error::{Error, Result};
use crate::rng::RngStream;

const DIRICHLET_ATTEMPTS: usize = 100;

/// Random permutation of `0..n` split into `W` shards of `⌊n/W⌋` indices.
pub fn partition_iid(n: usize, workers: usize, stream: &mut RngStream) -> Result<Vec<Shard>> {
    if workers == 0 || n < workers {
        return Err(Error::config(
            "partition",
            format!("i.i.d. partition needs n >= W, got n={n} W={workers}"),
        ));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(stream);
    let j = n / workers;
    Ok(perm
        .chunks_exact(j)
        .take(workers)
        .enumerate()
        .map(|(owner, c)| Shard {
            owner,
            indices: c.to_vec(),
        })
        .collect())
}

/// Draw `p ~ Dirichlet(β·1)` over the `active` workers. Uses the
/// `Gamma(β) = Gamma(β+1)·U^{1/β}` identity in log space so that tiny `β`
/// does not underflow every component to zero.
fn dirichlet_over(active: &[usize], beta: f64, stream: &mut RngStream) -> Vec<f64> {
    let gamma = Gamma::new(beta + 1.0, 1.0).expect("positive shape");
    let logs: Vec<f64> = active
        .iter()
        .map(|_| {
            let g: f64 = gamma.sample(stream);
            let u = 1.0 - stream.uniform(); // (0, 1]
            g.ln() + u.ln() / beta
        })
        .collect();
    let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|v| v / s).collect()
}

/// Per-class Dirichlet partition.
///
/// For each class `k` (in label order) the class's samples are shuffled and
/// split across workers by `p_k ~ Dirichlet(β·1_W)`. Workers already holding
/// at least `n/W` samples are excluded from later classes. A draw that leaves
/// some worker empty is repeated, up to 100 attempts. Each worker's indices
/// are finally shuffled and truncated to the common minimum size `J`.
pub fn partition_dirichlet(
    dataset: &Dataset,
    workers: usize,
    beta: f64,
    stream: &mut RngStream,
) -> Result<Vec<Shard>> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::config("partition.beta", "Dirichlet concentration must be positive"));
    }
    if workers == 0 || dataset.len() < workers {
        return Err(Error::config("partition", "Dirichlet partition needs n >= W >= 1"));
    }
    let n = dataset.len();
    let cap = n as f64 / workers as f64;
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); dataset.num_classes()];
    for (i, l) in dataset.labels().enumerate() {
        by_class[l].push(i);
    }

    for _ in 0..DIRICHLET_ATTEMPTS {
        let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); workers];
        for class in &by_class {
            if class.is_empty() {
                continue;
            }
            let mut idx = class.clone();
            idx.shuffle(stream);
            let active: Vec<usize> = (0..workers)
                .filter(|&w| (buckets[w].len() as f64) < cap)
                .collect();
            let p = dirichlet_over(&active, beta, stream);
            let mut start = 0usize;
            let mut acc = 0.0;
            for (slot, (&w, pw)) in active.iter().zip(&p).enumerate() {
                acc += pw;
                let end = if slot + 1 == active.len() {
                    idx.len()
                } else {
                    ((acc * idx.len() as f64) as usize).min(idx.len())
                };
                buckets[w].extend_from_slice(&idx[start..end.max(start)]);
                start = end.max(start);
            }
        }
        if buckets.iter().any(Vec::is_empty) {
            continue;
        }
        let j = buckets.iter().map(Vec::len).min().unwrap_or(0);
        return Ok(buckets
            .into_iter()
            .enumerate()
            .map(|(owner, mut b)| {
                b.shuffle(stream);
                b.truncate(j);
                Shard { owner, indices: b }
            })
            .collect());
    }
    Err(Error::DegeneratePartition(format!(
        "some worker stayed empty after {DIRICHLET_ATTEMPTS} Dirichlet draws (beta={beta}, W={workers})"
    )))
}

/// Worker `w` receives exactly the samples labelled `w`, in dataset order,
/// truncated to the smallest class count.
pub fn partition_one_class(dataset: &Dataset, workers: usize) -> Result<Vec<Shard>> {
    if workers != dataset.num_classes() {
        return Err(Error::config(
            "partition",
            format!(
                "one-class partition requires W = K, got W={workers} K={}",
                dataset.num_classes()
            ),
        ));
    }
    let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); workers];
    for (i, l) in dataset.labels().enumerate() {
        buckets[l].push(i);
    }
    let j = buckets.iter().map(Vec::len).min().unwrap_or(0);
    if j == 0 {
        return Err(Error::DegeneratePartition("some class has no samples".into()));
    }
    Ok(buckets
        .into_iter()
        .enumerate()
        .map(|(owner, mut b)| {
            b.truncate(j);
            Shard { owner, indices: b }
        })
        .collect())
}

/// Checks disjointness, equal sizes and index bounds.
pub fn check_partition(shards: &[Shard], n: usize) -> Result<usize> {
    let j = shards.first().map_or(0, Shard::len);
    let mut seen = vec![false; n];
    for s in shards {
        if s.len() != j {
            return Err(Error::Precondition(format!(
                "shard {} has {} samples, expected {j}",
                s.owner,
                s.len()
            )));
        }
        for &i in &s.indices {
            if i >= n || seen[i] {
                return Err(Error::Precondition(format!(
                    "index {i} out of bounds or repeated (shard {})",
                    s.owner
                )));
            }
            seen[i] = true;
        }
    }
    Ok(j)
}
