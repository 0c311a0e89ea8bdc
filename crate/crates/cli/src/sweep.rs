//! Grids of experiments. Each cell fixes attack, Dirichlet `β`, flip
//! probability, `R` and seed, and runs every listed aggregator.

use std::fs;
use std::path::{Path, PathBuf};

use poisonbench::{AggregatorKind, AttackKind};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::{apply_overrides, from_tree, load_tree, ExperimentConfig, PartitionConfig};
use crate::error::CliError;
use crate::experiment::{fmt_f64, load_data, run_experiment_with, LoadedData};

pub const SUMMARY_FILE: &str = "summary.csv";

/// Lists to cross. Absent lists keep the base config's value.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub aggregators: Vec<AggregatorKind>,
    #[serde(default)]
    pub attacks: Option<Vec<AttackKind>>,
    #[serde(default)]
    pub betas: Option<Vec<f64>>,
    #[serde(default)]
    pub flip_probs: Option<Vec<f64>>,
    #[serde(default)]
    pub regulars: Option<Vec<usize>>,
    #[serde(default)]
    pub seeds: Option<Vec<u64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub output_dir: PathBuf,
    /// An experiment config without `output_dir`.
    pub base: Value,
    pub grid: Grid,
}

/// One grid point.
#[derive(Clone, Debug, PartialEq)]
pub struct Cell {
    pub index: usize,
    pub attack: AttackKind,
    pub beta: Option<f64>,
    pub flip_prob: f64,
    pub regular: usize,
    pub seed: u64,
}

impl Cell {
    fn dir_name(&self) -> String {
        let beta = self.beta.map_or("base".to_string(), |b| b.to_string());
        format!(
            "cell{:03}_{}_beta{}_p{}_r{}_s{}",
            self.index,
            attack_name(self.attack),
            beta,
            self.flip_prob,
            self.regular,
            self.seed
        )
    }
}

fn attack_name(k: AttackKind) -> &'static str {
    match k {
        AttackKind::None => "none",
        AttackKind::StaticFlip => "static_flip",
        AttackKind::DynamicFlip => "dynamic_flip",
    }
}

pub fn load_sweep(path: &Path, overrides: &[String]) -> Result<SweepConfig, CliError> {
    let mut tree = load_tree(path)?;
    apply_overrides(&mut tree, overrides)?;
    let mut cfg: SweepConfig = from_tree(tree)?;
    if cfg.grid.aggregators.is_empty() {
        return Err(CliError::config("grid.aggregators", "the grid is empty"));
    }
    let lists_empty = [
        cfg.grid.attacks.as_ref().map(Vec::len),
        cfg.grid.betas.as_ref().map(Vec::len),
        cfg.grid.flip_probs.as_ref().map(Vec::len),
        cfg.grid.regulars.as_ref().map(Vec::len),
        cfg.grid.seeds.as_ref().map(Vec::len),
    ];
    if lists_empty.contains(&Some(0)) {
        return Err(CliError::config("grid", "a grid list is empty"));
    }
    cfg.grid.aggregators.dedup();
    Ok(cfg)
}

/// The base config parsed once to read defaults for absent lists.
fn base_config(sweep: &SweepConfig) -> Result<ExperimentConfig, CliError> {
    let mut tree = sweep.base.clone();
    if let Some(obj) = tree.as_object_mut() {
        obj.insert("output_dir".into(), Value::String(sweep.output_dir.display().to_string()));
    }
    from_tree::<ExperimentConfig>(tree)
        .map_err(|e| match e {
            CliError::Config { field, message } => CliError::config(format!("base.{field}"), message),
            other => other,
        })
}

pub fn cells(sweep: &SweepConfig) -> Result<Vec<Cell>, CliError> {
    let base = base_config(sweep)?;
    let g = &sweep.grid;
    let attacks = g.attacks.clone().unwrap_or_else(|| vec![base.attack.kind]);
    let betas: Vec<Option<f64>> = g.betas.as_ref().map_or(vec![None], |b| b.iter().copied().map(Some).collect());
    let probs = g.flip_probs.clone().unwrap_or_else(|| vec![base.attack.flip_prob]);
    let regulars = g.regulars.clone().unwrap_or_else(|| vec![base.hyper.regular]);
    let seeds = g.seeds.clone().unwrap_or_else(|| vec![base.hyper.seed]);
    let mut out = Vec::new();
    for &attack in &attacks {
        for &beta in &betas {
            for &flip_prob in &probs {
                for &regular in &regulars {
                    for &seed in &seeds {
                        out.push(Cell { index: out.len(), attack, beta, flip_prob, regular, seed });
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Concrete, resolved config of one aggregator run inside a cell.
pub fn cell_config(sweep: &SweepConfig, cell: &Cell, agg: AggregatorKind) -> Result<ExperimentConfig, CliError> {
    let mut c = base_config(sweep)?;
    c.output_dir = sweep.output_dir.join(cell.dir_name()).join(agg.name());
    c.attack.kind = cell.attack;
    c.attack.flip_prob = cell.flip_prob;
    if let Some(beta) = cell.beta {
        c.partition = PartitionConfig::Dirichlet { beta };
    }
    c.hyper.regular = cell.regular;
    c.hyper.seed = cell.seed;
    c.aggregator.kind = agg;
    // the server's belief follows the cell's true R
    c.aggregator.assumed_regular = None;
    c.resolve()
}

/// Outcome of one aggregator inside a cell.
#[derive(Clone, Debug)]
pub struct RunResult {
    pub cell: usize,
    pub aggregator: AggregatorKind,
    pub outcome: Result<f64, String>,
}

#[derive(Clone, Debug)]
pub struct SweepOutcome {
    pub results: Vec<RunResult>,
    pub failures: usize,
}

/// Run every cell with at most `jobs` concurrent runs, then write
/// `summary.csv`. Cell failures are recorded and the sweep continues.
pub fn run_sweep(sweep: &SweepConfig, jobs: usize) -> Result<SweepOutcome, CliError> {
    let cells = cells(sweep)?;
    let base = base_config(sweep)?.resolve().map_err(|e| match e {
        CliError::Config { field, message } => CliError::config(format!("base.{field}"), message),
        other => other,
    });
    // MNIST is shared by every cell; synthetic data depends on the seed
    let shared: Option<LoadedData> = match &base {
        Ok(b) if matches!(b.dataset, crate::config::DatasetConfig::Mnist { .. }) => Some(load_data(b)?),
        _ => None,
    };
    let tasks: Vec<(usize, AggregatorKind)> = cells
        .iter()
        .flat_map(|c| sweep.grid.aggregators.iter().map(move |&a| (c.index, a)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| CliError::Failure(e.to_string()))?;
    let results: Vec<RunResult> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(ci, agg)| {
                let outcome = cell_config(sweep, &cells[ci], agg)
                    .and_then(|cfg| match &shared {
                        Some(d) => run_experiment_with(&cfg, d),
                        None => load_data(&cfg).and_then(|d| run_experiment_with(&cfg, &d)),
                    })
                    .map(|s| s.final_test_acc)
                    .map_err(|e| e.to_string());
                RunResult { cell: ci, aggregator: agg, outcome }
            })
            .collect()
    });
    fs::create_dir_all(&sweep.output_dir)?;
    write_summary(&sweep.output_dir.join(SUMMARY_FILE), &cells, &sweep.grid.aggregators, &results)?;
    let failures = results.iter().filter(|r| r.outcome.is_err()).count();
    Ok(SweepOutcome { results, failures })
}

/// The best aggregator among successful runs; exact ties go to the one
/// listed first.
pub fn winner(accs: &[(AggregatorKind, f64)]) -> Option<(AggregatorKind, f64)> {
    accs.iter()
        .copied()
        .filter(|(_, a)| a.is_finite())
        .fold(None, |best, cur| match best {
            Some(b) if b.1 >= cur.1 => Some(b),
            _ => Some(cur),
        })
}

fn write_summary(
    path: &Path,
    cells: &[Cell],
    aggs: &[AggregatorKind],
    results: &[RunResult],
) -> Result<(), CliError> {
    let err = |e: csv::Error| CliError::Failure(e.to_string());
    let mut w = csv::Writer::from_path(path).map_err(err)?;
    let mut header: Vec<String> = ["cell", "attack", "beta", "flip_prob", "regular", "seed"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend(aggs.iter().map(|a| format!("acc_{}", a.name())));
    header.extend(["best_acc", "winner", "failed"].map(String::from));
    w.write_record(&header).map_err(err)?;
    for cell in cells {
        let mine: Vec<&RunResult> = results.iter().filter(|r| r.cell == cell.index).collect();
        let accs: Vec<(AggregatorKind, f64)> = aggs
            .iter()
            .map(|&a| {
                let acc = mine
                    .iter()
                    .find(|r| r.aggregator == a)
                    .and_then(|r| r.outcome.as_ref().ok().copied())
                    .unwrap_or(f64::NAN);
                (a, acc)
            })
            .collect();
        let failed: Vec<&str> = mine.iter().filter(|r| r.outcome.is_err()).map(|r| r.aggregator.name()).collect();
        let best = winner(&accs);
        let mut row = vec![
            cell.index.to_string(),
            attack_name(cell.attack).to_string(),
            cell.beta.map_or(String::new(), |b| b.to_string()),
            cell.flip_prob.to_string(),
            cell.regular.to_string(),
            cell.seed.to_string(),
        ];
        row.extend(accs.iter().map(|(_, a)| fmt_f64(*a)));
        row.push(best.map_or("NaN".into(), |b| fmt_f64(b.1)));
        row.push(best.map_or(String::new(), |b| b.0.name().to_string()));
        row.push(failed.join(";"));
        w.write_record(&row).map_err(err)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn winner_prefers_the_first_listed_on_ties() {
        use AggregatorKind::*;
        assert_eq!(winner(&[(Mean, 0.5), (Faba, 0.5)]), Some((Mean, 0.5)));
        assert_eq!(winner(&[(Mean, f64::NAN), (Faba, 0.1)]), Some((Faba, 0.1)));
        assert_eq!(winner(&[(Mean, f64::NAN)]), None);
    }
}
