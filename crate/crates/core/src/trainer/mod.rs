//! Distributed stochastic momentum.
//!
//! At step `t` every worker draws an index from its shard, computes the
//! sample gradient at `x^t` and folds it into its momentum
//! `m_w^t = (1 − α)·m_w^{t−1} + α·g`. The server aggregates all `W` momenta
//! and moves `x^{t+1} = x^t − γ·Agg(m_1^t, …, m_W^t)`. The momentum before
//! the first step is the step-0 gradient itself, so `m_w^0 = g_w^0`.
//!
//! Poisoned workers are the last `W − R` ids. They run exactly the same code;
//! the only difference is their (statically flipped) shard, or, under the
//! dynamic attack, the label substituted for each drawn sample.

mod metrics;
mod schedule;

pub use metrics::{
    dynamically_flipped, global_gradient, measure_a, measure_sigma2, measure_xi, shard_stats,
    ShardStats, Snapshot,
};
pub use schedule::{theorem_error_bound, theorem_schedule, BoundKind, TheoryInputs};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::aggregators::AggregatorSpec;
use crate::attacks::{apply_static_poisoning, dynamic_flip, AttackKind, AttackSpec};
use crate::error::{Error, Result};
use crate::models::{accuracy, LossModel};
use crate::rng::{derive_stream, Purpose, RngStream};
use crate::types::{HyperParams, ModelParams, Sample};
use crate::vector;

/// `‖x‖` beyond which a run is declared divergent.
pub const DIVERGENCE_NORM: f64 = 1e8;

/// Work below this many `param_dim × samples` multiply-adds per step stays
/// on the calling thread.
const PARALLEL_THRESHOLD: usize = 50_000;

/// How many samples each worker draws per step.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode", content = "size")]
pub enum SampleMode {
    /// One uniformly drawn sample.
    Single,
    /// `B` independent uniform draws, averaged.
    MiniBatch(usize),
    /// The whole shard (deterministic local gradient).
    Full,
}

#[derive(Clone, Debug)]
pub struct WorkerState {
    pub id: usize,
    pub samples: Vec<Sample>,
    pub poisoned: bool,
    pub momentum: Vec<f64>,
    pub sample_stream: RngStream,
}

#[derive(Clone, Debug)]
pub struct TrainState {
    pub x: ModelParams,
    pub t: usize,
    pub workers: Vec<WorkerState>,
    pub prev_aggregate: Option<Vec<f64>>,
    /// `‖Agg − mean of regular momenta‖` of the latest step.
    pub last_agg_dev: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub hyper: HyperParams,
    pub aggregator: AggregatorSpec,
    pub attack: AttackSpec,
    pub sample_mode: SampleMode,
    /// Logging interval; `None` means `⌈T/200⌉`.
    pub log_every: Option<usize>,
}

impl TrainConfig {
    pub fn new(hyper: HyperParams, aggregator: AggregatorSpec, attack: AttackSpec) -> Self {
        Self {
            hyper,
            aggregator,
            attack,
            sample_mode: SampleMode::Single,
            log_every: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.hyper.validate()?;
        self.aggregator.validate(self.hyper.workers)?;
        self.attack.validate()?;
        if let SampleMode::MiniBatch(0) = self.sample_mode {
            return Err(Error::config("train.batch", "mini-batch size must be positive"));
        }
        if self.log_every == Some(0) {
            return Err(Error::config("train.log_every", "must be positive"));
        }
        Ok(())
    }

    pub fn log_interval(&self) -> usize {
        self.log_every
            .unwrap_or_else(|| self.hyper.iterations.div_ceil(200))
            .max(1)
    }
}

/// One logged row. Absent quantities are `NaN`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub t: usize,
    pub train_loss: f64,
    pub test_acc: f64,
    pub grad_norm_sq: f64,
    pub xi_hat: f64,
    pub a_hat: f64,
    pub sigma2_hat_max: f64,
    pub agg_dev: f64,
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub records: Vec<RunRecord>,
    pub final_x: ModelParams,
}

/// Everything a run needs besides its [`TrainConfig`].
pub struct Simulation<'a> {
    pub model: &'a dyn LossModel,
    /// Per-worker training samples, static poisoning already applied.
    pub shards: Vec<Vec<Sample>>,
    pub test: Option<&'a [Sample]>,
    pub x0: ModelParams,
}

/// Materialise shards for `W` workers and apply static flipping to the last
/// `W − R`, each from its own `Poison` stream.
pub fn prepare_shards(
    clean: Vec<Vec<Sample>>,
    hyper: &HyperParams,
    attack: &AttackSpec,
    num_classes: usize,
) -> Vec<Vec<Sample>> {
    clean
        .into_iter()
        .enumerate()
        .map(|(w, samples)| {
            if w >= hyper.regular && attack.kind == AttackKind::StaticFlip {
                let mut s = derive_stream(hyper.seed, w as u64, Purpose::Poison);
                apply_static_poisoning(&samples, num_classes, attack.flip_prob, &mut s)
            } else {
                samples
            }
        })
        .collect()
}

impl TrainState {
    pub fn new(sim: &Simulation<'_>, hyper: &HyperParams) -> Result<Self> {
        if sim.shards.len() != hyper.workers {
            return Err(Error::config(
                "hyper.workers",
                format!("{} shards for W = {}", sim.shards.len(), hyper.workers),
            ));
        }
        if sim.x0.dim() != sim.model.param_dim() {
            return Err(Error::Dimension {
                expected: sim.model.param_dim(),
                found: sim.x0.dim(),
            });
        }
        let workers = sim
            .shards
            .iter()
            .enumerate()
            .map(|(w, samples)| {
                if samples.is_empty() {
                    return Err(Error::config("partition", format!("worker {w} has an empty shard")));
                }
                Ok(WorkerState {
                    id: w,
                    samples: samples.clone(),
                    poisoned: w >= hyper.regular,
                    momentum: Vec::new(),
                    sample_stream: derive_stream(hyper.seed, w as u64, Purpose::Sample),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            x: sim.x0.clone(),
            t: 0,
            workers,
            prev_aggregate: None,
            last_agg_dev: None,
        })
    }

    pub fn regular_count(&self) -> usize {
        self.workers.iter().filter(|w| !w.poisoned).count()
    }
}

/// Gradient a worker reports at step `t`, averaged over its draws.
fn worker_gradient(
    worker: &WorkerState,
    x: &[f64],
    t: usize,
    model: &dyn LossModel,
    attack: &AttackSpec,
    mode: SampleMode,
) -> Result<Vec<f64>> {
    let flip = worker.poisoned && attack.kind == AttackKind::DynamicFlip;
    let draw = |s: &Sample| -> Result<Sample> {
        if flip {
            Ok(s.with_label(dynamic_flip(s, x, model)?))
        } else {
            Ok(s.clone())
        }
    };
    let j = worker.samples.len();
    let mut stream = worker.sample_stream.at_step(t as u64);
    let picks: Vec<usize> = match mode {
        SampleMode::Single => vec![stream.index(j)],
        SampleMode::MiniBatch(b) => (0..b).map(|_| stream.index(j)).collect(),
        SampleMode::Full => (0..j).collect(),
    };
    if picks.len() == 1 {
        return model.sample_gradient(x, &draw(&worker.samples[picks[0]])?);
    }
    let batch = picks
        .iter()
        .map(|&i| draw(&worker.samples[i]))
        .collect::<Result<Vec<_>>>()?;
    crate::models::full_gradient(model, x, &batch)
}

fn update_momentum(worker: &mut WorkerState, g: Vec<f64>, alpha: f64) {
    if worker.momentum.is_empty() {
        // m^{-1} is the step-0 gradient
        worker.momentum = g.clone();
    }
    for (m, gi) in worker.momentum.iter_mut().zip(&g) {
        *m = (1.0 - alpha) * *m + alpha * gi;
    }
}

/// One iteration of the algorithm, in place.
pub fn step(
    state: &mut TrainState,
    cfg: &TrainConfig,
    model: &dyn LossModel,
) -> Result<()> {
    let x = state.x.as_slice().to_vec();
    let t = state.t;
    let alpha = cfg.hyper.alpha;
    let per_step = match cfg.sample_mode {
        SampleMode::Single => 1,
        SampleMode::MiniBatch(b) => b,
        SampleMode::Full => state.workers[0].samples.len(),
    };
    let work = |w: &mut WorkerState| -> Result<()> {
        let g = worker_gradient(w, &x, t, model, &cfg.attack, cfg.sample_mode)?;
        update_momentum(w, g, alpha);
        Ok(())
    };
    if model.param_dim() * per_step * state.workers.len() >= PARALLEL_THRESHOLD {
        state.workers.par_iter_mut().try_for_each(work)?;
    } else {
        state.workers.iter_mut().try_for_each(work)?;
    }

    let messages: Vec<Vec<f64>> = state.workers.iter().map(|w| w.momentum.clone()).collect();
    let agg = cfg
        .aggregator
        .aggregate(&messages, state.prev_aggregate.as_deref())?;
    let regular_mean = vector::mean_of(
        state.workers.iter().filter(|w| !w.poisoned).map(|w| &w.momentum),
        x.len(),
    );
    state.last_agg_dev = Some(vector::distance_unchecked(&agg, &regular_mean));

    state.x.descend(cfg.hyper.gamma, &agg);
    state.t += 1;
    if !state.x.is_finite() || state.x.norm() > DIVERGENCE_NORM {
        return Err(Error::Divergence {
            t: state.t,
            gamma: cfg.hyper.gamma,
            reason: format!("‖x‖ = {:e}", state.x.norm()),
        });
    }
    state.prev_aggregate = Some(agg);
    Ok(())
}

/// Metrics row for the current state.
pub fn record(
    state: &TrainState,
    cfg: &TrainConfig,
    model: &dyn LossModel,
    test: Option<&[Sample]>,
) -> Result<RunRecord> {
    let x = state.x.as_slice();
    let parallel = model.param_dim() * state.workers[0].samples.len() >= PARALLEL_THRESHOLD;
    let regular: Vec<&[Sample]> = state
        .workers
        .iter()
        .filter(|w| !w.poisoned)
        .map(|w| w.samples.as_slice())
        .collect();
    let poisoned: Vec<Vec<Sample>> = state
        .workers
        .iter()
        .filter(|w| w.poisoned)
        .map(|w| {
            if cfg.attack.kind == AttackKind::DynamicFlip {
                dynamically_flipped(model, x, &w.samples)
            } else {
                Ok(w.samples.clone())
            }
        })
        .collect::<Result<_>>()?;
    let snap = metrics::snapshot(model, x, &regular, &poisoned, parallel)?;
    let test_acc = match test {
        Some(t) if !t.is_empty() => accuracy(model, x, t)?,
        _ => f64::NAN,
    };
    Ok(RunRecord {
        t: state.t,
        train_loss: snap.train_loss,
        test_acc,
        grad_norm_sq: snap.grad_norm_sq,
        xi_hat: snap.xi_hat,
        a_hat: snap.a_hat.unwrap_or(f64::NAN),
        sigma2_hat_max: snap.sigma2_hat_max,
        agg_dev: state.last_agg_dev.unwrap_or(f64::NAN),
    })
}

/// `T` steps, logging at `t = 0`, every `log_interval` steps and at `t = T`.
pub fn run(sim: &Simulation<'_>, cfg: &TrainConfig) -> Result<RunOutput> {
    run_with(sim, cfg, |_| {})
}

/// [`run`] with a hook that sees the state after every step.
pub fn run_with(
    sim: &Simulation<'_>,
    cfg: &TrainConfig,
    mut observe: impl FnMut(&TrainState),
) -> Result<RunOutput> {
    cfg.validate()?;
    let mut state = TrainState::new(sim, &cfg.hyper)?;
    let every = cfg.log_interval();
    let total = cfg.hyper.iterations;
    let mut records = vec![record(&state, cfg, sim.model, sim.test)?];
    while state.t < total {
        step(&mut state, cfg, sim.model)?;
        observe(&state);
        if state.t % every == 0 || state.t == total {
            records.push(record(&state, cfg, sim.model, sim.test)?);
        }
    }
    Ok(RunOutput {
        records,
        final_x: state.x,
    })
}
