//! One experiment: data, partition, model, training, and the files it
//! leaves behind.

use std::fs;
use std::path::{Path, PathBuf};

use poisonbench::data::{
    load_mnist_dir, partition_dirichlet, partition_iid, partition_one_class, synth_blobs, Dataset, Split,
};
use poisonbench::trainer::prepare_shards;
use poisonbench::{
    derive_stream, run, LossModel, Mlp, ModelParams, Purpose, RunRecord, Sample, Simulation, Softmax, TrainConfig,
};
use serde::Serialize;

use crate::config::{DatasetConfig, ExperimentConfig, ModelConfig, PartitionConfig};
use crate::error::CliError;

pub const METRICS_FILE: &str = "metrics.csv";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const METRICS_COLUMNS: [&str; 8] = [
    "t",
    "train_loss",
    "test_acc",
    "grad_norm_sq",
    "xi_hat",
    "a_hat",
    "sigma2_hat_max",
    "agg_dev",
];

/// Training and test sets.
#[derive(Clone, Debug)]
pub struct LoadedData {
    pub train: Dataset,
    pub test: Dataset,
}

/// Load the datasets a config asks for. Synthetic data depends on
/// `hyper.seed`; MNIST does not.
pub fn load_data(cfg: &ExperimentConfig) -> Result<LoadedData, CliError> {
    match &cfg.dataset {
        DatasetConfig::Mnist { dir, train_per_class, test_size } => {
            let dir = dir.as_deref().ok_or_else(|| CliError::config("dataset.dir", "unresolved"))?;
            let mut train = load_mnist_dir(dir, Split::Train)?;
            if let Some(n) = train_per_class {
                train = train.balanced_subset(*n)?;
            }
            let mut test = load_mnist_dir(dir, Split::Test)?;
            if let Some(n) = test_size {
                if *n > test.len() {
                    return Err(CliError::config(
                        "dataset.test_size",
                        format!("asked for {n} test samples, only {} available", test.len()),
                    ));
                }
                test = test.take(*n);
            }
            Ok(LoadedData { train, test })
        }
        DatasetConfig::Synth { classes, dim, per_class, spread, test_per_class } => {
            let seed = cfg.hyper.seed;
            // train and test share class means: draw both from one stream
            let mut s = derive_stream(seed, 0, Purpose::Synth);
            let all = synth_blobs(*classes, *dim, per_class + test_per_class, *spread, &mut s)?;
            let (mut train, mut test) = (Vec::new(), Vec::new());
            for (i, sample) in all.samples().iter().enumerate() {
                if i % (per_class + test_per_class) < *per_class {
                    train.push(sample.clone());
                } else {
                    test.push(sample.clone());
                }
            }
            Ok(LoadedData {
                train: Dataset::new(format!("{}-train", all.name()), train, *classes, *dim)?,
                test: Dataset::new(format!("{}-test", all.name()), test, *classes, *dim)?,
            })
        }
    }
}

fn build_model(cfg: &ExperimentConfig, data: &Dataset) -> Box<dyn LossModel> {
    let (k, d) = (data.num_classes(), data.feature_dim());
    match cfg.model {
        ModelConfig::Softmax => Box::new(Softmax::new(k, d)),
        ModelConfig::Mlp { hidden } => Box::new(Mlp::with_hidden(d, hidden, k)),
    }
}

/// Clean per-worker samples under the configured partition.
pub fn clean_shards(cfg: &ExperimentConfig, train: &Dataset) -> Result<Vec<Vec<Sample>>, CliError> {
    let w = cfg.hyper.workers;
    let mut stream = derive_stream(cfg.hyper.seed, 0, Purpose::Partition);
    let shards = match cfg.partition {
        PartitionConfig::Iid => partition_iid(train.len(), w, &mut stream)?,
        PartitionConfig::Dirichlet { beta } => partition_dirichlet(train, w, beta, &mut stream)?,
        PartitionConfig::OneClass => partition_one_class(train, w)?,
    };
    Ok(shards.iter().map(|s| train.gather(s)).collect())
}

pub fn train_config(cfg: &ExperimentConfig) -> Result<TrainConfig, CliError> {
    let hyper = cfg.hyper.clone();
    let mut tc = TrainConfig::new(hyper.clone(), cfg.aggregator.spec(hyper.regular), cfg.attack.spec());
    tc.sample_mode = cfg.train.mode()?;
    tc.log_every = cfg.log_every;
    Ok(tc)
}

/// Train and return the logged rows.
pub fn simulate(cfg: &ExperimentConfig, data: &LoadedData) -> Result<Vec<RunRecord>, CliError> {
    if data.train.num_classes() != cfg.num_classes() {
        return Err(CliError::config(
            "dataset",
            format!("expected {} classes, data has {}", cfg.num_classes(), data.train.num_classes()),
        ));
    }
    let model = build_model(cfg, &data.train);
    let tc = train_config(cfg)?;
    let shards = prepare_shards(clean_shards(cfg, &data.train)?, &tc.hyper, &tc.attack, model.num_classes());
    let x0: ModelParams = model.init_params(&mut derive_stream(cfg.hyper.seed, 0, Purpose::Init))?;
    let sim = Simulation {
        model: model.as_ref(),
        shards,
        test: Some(data.test.samples()),
        x0,
    };
    Ok(run(&sim, &tc)?.records)
}

/// Scientific notation with 17 significant digits, enough to round-trip
/// any f64.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:.16e}")
    }
}

pub fn write_metrics(path: &Path, records: &[RunRecord]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::Failure(e.to_string()))?;
    let io = |e: csv::Error| CliError::Failure(e.to_string());
    w.write_record(METRICS_COLUMNS).map_err(io)?;
    for r in records {
        w.write_record([
            r.t.to_string(),
            fmt_f64(r.train_loss),
            fmt_f64(r.test_acc),
            fmt_f64(r.grad_norm_sq),
            fmt_f64(r.xi_hat),
            fmt_f64(r.a_hat),
            fmt_f64(r.sigma2_hat_max),
            fmt_f64(r.agg_dev),
        ])
        .map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct DataSummary<'a> {
    train_name: &'a str,
    train_size: usize,
    test_size: usize,
    num_classes: usize,
    feature_dim: usize,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    code_version: &'static str,
    seed: u64,
    config: &'a ExperimentConfig,
    data: DataSummary<'a>,
    rows: usize,
    final_test_acc: Option<f64>,
}

/// What a finished run reports.
#[derive(Clone, Debug)]
pub struct RunSummary {
    pub output_dir: PathBuf,
    pub rows: usize,
    pub final_test_acc: f64,
}

/// Run, then write `metrics.csv` and `manifest.json` under `output_dir`.
pub fn run_experiment_with(cfg: &ExperimentConfig, data: &LoadedData) -> Result<RunSummary, CliError> {
    let records = simulate(cfg, data)?;
    fs::create_dir_all(&cfg.output_dir)?;
    write_metrics(&cfg.output_dir.join(METRICS_FILE), &records)?;
    let final_test_acc = records.last().map_or(f64::NAN, |r| r.test_acc);
    let manifest = Manifest {
        tool: "poisonbench",
        code_version: env!("CARGO_PKG_VERSION"),
        seed: cfg.hyper.seed,
        config: cfg,
        data: DataSummary {
            train_name: data.train.name(),
            train_size: data.train.len(),
            test_size: data.test.len(),
            num_classes: data.train.num_classes(),
            feature_dim: data.train.feature_dim(),
        },
        rows: records.len(),
        final_test_acc: final_test_acc.is_finite().then_some(final_test_acc),
    };
    let json = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Failure(e.to_string()))?;
    fs::write(cfg.output_dir.join(MANIFEST_FILE), json + "\n")?;
    Ok(RunSummary {
        output_dir: cfg.output_dir.clone(),
        rows: records.len(),
        final_test_acc,
    })
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunSummary, CliError> {
    let data = load_data(cfg)?;
    run_experiment_with(cfg, &data)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for v in [0.1, 1.0 / 3.0, 1e-300, -2.5e17, 123_456_789.123_456_79, f64::MIN_POSITIVE] {
            let s = fmt_f64(v);
            assert_eq!(s.parse::<f64>().unwrap(), v, "{s}");
        }
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_f64(f64::NAN), "NaN");
    }
}
