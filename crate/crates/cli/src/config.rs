//! Experiment configuration: a TOML file, dotted command-line overrides and
//! the resolution step that fills every default before anything runs.

use std::path::{Path, PathBuf};

use poisonbench::aggregators::DEFAULT_CC_TAU;
use poisonbench::{AggregatorKind, AggregatorSpec, AttackKind, AttackSpec, CcStart, HyperParams, SampleMode};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::CliError;

/// Default MNIST location when `dataset.dir` is not given.
pub const DATA_DIR_ENV: &str = "POISONBENCH_DATA_DIR";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub output_dir: PathBuf,
    /// Logging interval; defaults to `⌈T/200⌉`.
    #[serde(default)]
    pub log_every: Option<usize>,
    pub dataset: DatasetConfig,
    #[serde(default)]
    pub partition: PartitionConfig,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub attack: AttackConfig,
    pub aggregator: AggregatorConfig,
    pub hyper: HyperParams,
    #[serde(default)]
    pub train: TrainSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetConfig {
    Mnist {
        #[serde(default)]
        dir: Option<PathBuf>,
        /// Balanced training subset with this many samples per class.
        #[serde(default)]
        train_per_class: Option<usize>,
        /// First `n` test samples.
        #[serde(default)]
        test_size: Option<usize>,
    },
    Synth {
        classes: usize,
        dim: usize,
        per_class: usize,
        #[serde(default = "default_spread")]
        spread: f64,
        #[serde(default = "default_test_per_class")]
        test_per_class: usize,
    },
}

fn default_spread() -> f64 {
    0.5
}

fn default_test_per_class() -> usize {
    50
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PartitionConfig {
    #[default]
    Iid,
    Dirichlet {
        beta: f64,
    },
    OneClass,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    #[default]
    Softmax,
    Mlp {
        #[serde(default = "default_hidden")]
        hidden: usize,
    },
}

fn default_hidden() -> usize {
    poisonbench::models::MLP_HIDDEN
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttackConfig {
    pub kind: AttackKind,
    #[serde(default = "one")]
    pub flip_prob: f64,
}

fn one() -> f64 {
    1.0
}

impl Default for AttackConfig {
    fn default() -> Self {
        Self {
            kind: AttackKind::None,
            flip_prob: 1.0,
        }
    }
}

impl AttackConfig {
    pub fn spec(&self) -> AttackSpec {
        match self.kind {
            AttackKind::None => AttackSpec::none(),
            AttackKind::StaticFlip => AttackSpec::static_flip(self.flip_prob),
            AttackKind::DynamicFlip => AttackSpec::dynamic_flip(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AggregatorConfig {
    pub kind: AggregatorKind,
    /// Defaults to `hyper.regular`.
    #[serde(default)]
    pub assumed_regular: Option<usize>,
    #[serde(default = "default_tau")]
    pub cc_tau: f64,
    #[serde(default = "one_usize")]
    pub cc_iters: usize,
    #[serde(default = "default_start")]
    pub cc_start: CcStart,
}

fn default_tau() -> f64 {
    DEFAULT_CC_TAU
}

fn one_usize() -> usize {
    1
}

fn default_start() -> CcStart {
    CcStart::Previous
}

impl AggregatorConfig {
    pub fn spec(&self, regular: usize) -> AggregatorSpec {
        AggregatorSpec {
            kind: self.kind,
            assumed_regular: self.assumed_regular.unwrap_or(regular),
            cc_tau: self.cc_tau,
            cc_iters: self.cc_iters,
            cc_start: self.cc_start,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleKind {
    #[default]
    Single,
    Minibatch,
    Full,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSection {
    #[serde(default)]
    pub sample_mode: SampleKind,
    #[serde(default)]
    pub batch: Option<usize>,
}

impl TrainSection {
    pub fn mode(&self) -> Result<SampleMode, CliError> {
        match (self.sample_mode, self.batch) {
            (SampleKind::Single, _) => Ok(SampleMode::Single),
            (SampleKind::Full, _) => Ok(SampleMode::Full),
            (SampleKind::Minibatch, Some(b)) if b > 0 => Ok(SampleMode::MiniBatch(b)),
            (SampleKind::Minibatch, _) => Err(CliError::config("train.batch", "mini-batch mode needs batch >= 1")),
        }
    }
}

/// Read a TOML config or a `manifest.json` (whose `config` entry is used)
/// into a JSON tree.
pub fn load_tree(path: &Path) -> Result<Value, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::config("config", format!("cannot read {}: {e}", path.display())))?;
    if path.extension().is_some_and(|e| e == "json") {
        let mut v: Value = serde_json::from_str(&text)
            .map_err(|e| CliError::config("config", format!("{}: {e}", path.display())))?;
        return match v.get_mut("config") {
            Some(c) => Ok(c.take()),
            None => Ok(v),
        };
    }
    let table: toml::Table = toml::from_str(&text)
        .map_err(|e| CliError::config("config", format!("{}: {e}", path.display())))?;
    serde_json::to_value(table).map_err(|e| CliError::config("config", e.to_string()))
}

/// Parse an override value as a TOML literal, falling back to a bare string.
fn override_value(raw: &str) -> Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .and_then(|v| serde_json::to_value(v).ok())
        .unwrap_or_else(|| Value::String(raw.to_string()))
}

/// Apply `--a.b.c=value` overrides in order.
pub fn apply_overrides(tree: &mut Value, overrides: &[String]) -> Result<(), CliError> {
    for o in overrides {
        let body = o
            .strip_prefix("--")
            .ok_or_else(|| CliError::config("override", format!("`{o}` is not of the form --section.key=value")))?;
        let (path, raw) = body
            .split_once('=')
            .ok_or_else(|| CliError::config("override", format!("`{o}` has no `=value`")))?;
        let keys: Vec<&str> = path.split('.').collect();
        if keys.iter().any(|k| k.is_empty()) {
            return Err(CliError::config("override", format!("empty key in `{o}`")));
        }
        let mut node = &mut *tree;
        for k in &keys[..keys.len() - 1] {
            let obj = node
                .as_object_mut()
                .ok_or_else(|| CliError::config(path, "cannot descend into a non-table value"))?;
            node = obj.entry(k.to_string()).or_insert_with(|| Value::Object(Default::default()));
        }
        node.as_object_mut()
            .ok_or_else(|| CliError::config(path, "cannot descend into a non-table value"))?
            .insert(keys[keys.len() - 1].to_string(), override_value(raw));
    }
    Ok(())
}

/// Deserialize a tree, reporting the offending field path on failure.
pub fn from_tree<T: serde::de::DeserializeOwned>(tree: Value) -> Result<T, CliError> {
    serde_path_to_error::deserialize(tree).map_err(|e| {
        let path = e.path().to_string();
        let field = if path == "." { "config".to_string() } else { path };
        CliError::config(field, e.into_inner().to_string())
    })
}

pub fn load_config(path: &Path, overrides: &[String]) -> Result<ExperimentConfig, CliError> {
    let mut tree = load_tree(path)?;
    apply_overrides(&mut tree, overrides)?;
    from_tree::<ExperimentConfig>(tree)?.resolve()
}

impl ExperimentConfig {
    /// Fill defaults that depend on other fields or the environment, then
    /// validate. Idempotent, so a resolved config resolves to itself.
    pub fn resolve(mut self) -> Result<Self, CliError> {
        if let DatasetConfig::Mnist { dir, .. } = &mut self.dataset {
            if dir.is_none() {
                let env = std::env::var_os(DATA_DIR_ENV).ok_or_else(|| {
                    CliError::config("dataset.dir", format!("not set and ${DATA_DIR_ENV} is unset"))
                })?;
                *dir = Some(PathBuf::from(env));
            }
        }
        if self.aggregator.assumed_regular.is_none() {
            self.aggregator.assumed_regular = Some(self.hyper.regular);
        }
        if self.log_every.is_none() {
            self.log_every = Some(self.hyper.iterations.div_ceil(200).max(1));
        }
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let h = &self.hyper;
        h.validate()?;
        self.aggregator.spec(h.regular).validate(h.workers)?;
        self.attack.spec().validate()?;
        self.train.mode()?;
        if self.attack.kind == AttackKind::None && h.regular < h.workers {
            return Err(CliError::config(
                "attack.kind",
                "poisoned workers are configured (R < W) but the attack is `none`",
            ));
        }
        if self.log_every == Some(0) {
            return Err(CliError::config("log_every", "must be positive"));
        }
        if let PartitionConfig::Dirichlet { beta } = self.partition {
            if !(beta > 0.0 && beta.is_finite()) {
                return Err(CliError::config("partition.beta", "must be positive"));
            }
        }
        if self.partition == PartitionConfig::OneClass && h.workers != self.num_classes() {
            return Err(CliError::config(
                "partition",
                format!("one_class needs W = K, got W={} K={}", h.workers, self.num_classes()),
            ));
        }
        match self.dataset {
            DatasetConfig::Synth { classes, dim, per_class, spread, test_per_class } => {
                if classes < 2 || dim == 0 || per_class == 0 || test_per_class == 0 {
                    return Err(CliError::config("dataset", "synth needs classes >= 2 and positive sizes"));
                }
                if !(spread >= 0.0 && spread.is_finite()) {
                    return Err(CliError::config("dataset.spread", "must be finite and non-negative"));
                }
            }
            DatasetConfig::Mnist { train_per_class, test_size, .. } => {
                if train_per_class == Some(0) || test_size == Some(0) {
                    return Err(CliError::config("dataset", "subset sizes must be positive"));
                }
            }
        }
        if let ModelConfig::Mlp { hidden: 0 } = self.model {
            return Err(CliError::config("model.hidden", "must be positive"));
        }
        Ok(())
    }

    pub fn num_classes(&self) -> usize {
        match self.dataset {
            DatasetConfig::Mnist { .. } => 10,
            DatasetConfig::Synth { classes, .. } => classes,
        }
    }
}
