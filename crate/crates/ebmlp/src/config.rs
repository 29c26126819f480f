//! Run configuration: a TOML file with sections whose keys are unique across
//! sections, so every key can also be given on the command line as
//! `--key value`.
//!
//! ```toml
//! [run]
//! track = "classical2"
//! trials = 5
//! seed = 0
//!
//! [data]
//! class_a = 0
//! class_b = 1
//! train_count = 20
//!
//! [network]
//! hidden = 548
//!
//! [training]
//! batch_size = 5
//! learning_rate = 0.1
//! steps = 20
//!
//! [sampler]
//! beta_eff = 16.0
//! reads = 1000
//! ```

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ebmlp_core::sampling::HardwareRange;
use ebmlp_core::{AdamConfig, Init, NegativeEstimator, SamplerConfig, SimAnnealSampler, TrainConfig};
use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::error::{AppError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Track {
    /// MLP trained by backpropagation.
    #[serde(alias = "classical-1")]
    Classical1,
    /// EBM trained with Gibbs-sampled gradients.
    #[serde(alias = "classical-2")]
    Classical2,
    /// EBM trained with the simulated annealer on the clamped Ising model.
    QuantumSim,
    Equivalence,
    Bench,
}

impl Track {
    pub fn as_str(self) -> &'static str {
        match self {
            Track::Classical1 => "classical1",
            Track::Classical2 => "classical2",
            Track::QuantumSim => "quantum-sim",
            Track::Equivalence => "equivalence",
            Track::Bench => "bench",
        }
    }

    /// Whether the track trains the energy-based reading.
    pub fn is_ebm(self) -> bool {
        matches!(self, Track::Classical2 | Track::QuantumSim)
    }
}

impl fmt::Display for Track {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Track {
    type Err = AppError;

    fn from_str(s: &str) -> Result<Self> {
        Value::String(s.to_owned())
            .try_into()
            .map_err(|_| AppError::Config(format!("unknown track `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitKind {
    Gaussian,
    FanInUniform,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub track: Track,
    pub trials: usize,
    pub seed: u64,

    /// Directory holding the four MNIST files. Individual paths below win.
    pub mnist_dir: Option<PathBuf>,
    pub train_images: Option<PathBuf>,
    pub train_labels: Option<PathBuf>,
    pub test_images: Option<PathBuf>,
    pub test_labels: Option<PathBuf>,
    pub class_a: u8,
    pub class_b: u8,
    pub train_count: usize,

    pub inputs: usize,
    pub hidden: usize,
    pub outputs: usize,
    /// Defaults to fan-in uniform for `classical1` and Gaussian otherwise.
    pub init: Option<InitKind>,
    pub init_std: f64,

    pub batch_size: usize,
    pub learning_rate: f64,
    pub steps: usize,

    pub beta_eff: f64,
    pub reads: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub anneal_sweeps: usize,
    pub beta_start: f64,
    pub beta_sim: Option<f64>,
    pub clamp: bool,
    pub estimator: EstimatorKind,

    pub out_dir: PathBuf,
    pub dump_bqm: bool,

    pub sizes: Vec<usize>,
    pub repeats: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorKind {
    RecomputeHidden,
    SampledHidden,
}

impl Default for RunConfig {
    fn default() -> Self {
        let sampler = SamplerConfig::default();
        Self {
            track: Track::Classical2,
            trials: 5,
            seed: 0,
            mnist_dir: None,
            train_images: None,
            train_labels: None,
            test_images: None,
            test_labels: None,
            class_a: 0,
            class_b: 1,
            train_count: 20,
            inputs: 784,
            hidden: 548,
            outputs: 1,
            init: None,
            init_std: 0.01,
            batch_size: 5,
            learning_rate: 0.1,
            steps: 20,
            beta_eff: sampler.beta_eff,
            reads: sampler.reads,
            burn_in: sampler.burn_in,
            thin: sampler.thin,
            anneal_sweeps: sampler.anneal_sweeps,
            beta_start: SimAnnealSampler::default().beta_start,
            beta_sim: None,
            clamp: true,
            estimator: EstimatorKind::RecomputeHidden,
            out_dir: PathBuf::from("runs"),
            dump_bqm: false,
            sizes: vec![10, 100, 1000, 10_000],
            repeats: 21,
        }
    }
}

impl RunConfig {
    /// Parses TOML text, then applies `--key value` overrides.
    pub fn from_toml_str(text: &str, overrides: &[(String, String)]) -> Result<Self> {
        let table: Table = text
            .parse()
            .map_err(|e: toml::de::Error| AppError::Config(e.to_string()))?;
        let mut flat = flatten(table)?;
        for (key, raw) in overrides {
            flat.insert(key.replace('-', "_"), parse_scalar(raw));
        }
        let config: RunConfig = Value::Table(flat)
            .try_into()
            .map_err(|e: toml::de::Error| AppError::Config(e.message().to_owned()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_file(path: &Path, overrides: &[(String, String)]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
        Self::from_toml_str(&text, overrides)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("trials", self.trials),
            ("train_count", self.train_count),
            ("inputs", self.inputs),
            ("hidden", self.hidden),
            ("outputs", self.outputs),
            ("batch_size", self.batch_size),
            ("reads", self.reads),
            ("thin", self.thin),
            ("anneal_sweeps", self.anneal_sweeps),
            ("repeats", self.repeats),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(AppError::Config(format!("{name} must be at least 1")));
        }
        if self.sizes.contains(&0) {
            return Err(AppError::Config("bench sizes must be at least 1".into()));
        }
        if self.class_a == self.class_b {
            return Err(AppError::Config("class_a and class_b must differ".into()));
        }
        if !self.train_count.is_multiple_of(2) {
            return Err(AppError::Config("train_count must be even".into()));
        }
        if !(self.init_std >= 0.0 && self.init_std.is_finite()) {
            return Err(AppError::Config("init_std must be finite and non-negative".into()));
        }
        self.train_config(0).validate()?;
        self.sampler_config().validate()?;
        Ok(())
    }

    pub fn dims(&self) -> ebmlp_core::Dims {
        ebmlp_core::Dims::new(self.inputs, self.hidden, self.outputs)
    }

    pub fn init(&self) -> Init {
        let kind = self.init.unwrap_or(match self.track {
            Track::Classical1 => InitKind::FanInUniform,
            _ => InitKind::Gaussian,
        });
        match kind {
            InitKind::Gaussian => Init::Gaussian { std: self.init_std },
            InitKind::FanInUniform => Init::FanInUniform,
        }
    }

    pub fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            batch_size: self.batch_size,
            steps: self.steps,
            adam: AdamConfig::with_learning_rate(self.learning_rate),
            seed,
        }
    }

    pub fn sampler_config(&self) -> SamplerConfig {
        SamplerConfig {
            beta_eff: self.beta_eff,
            reads: self.reads,
            burn_in: self.burn_in,
            thin: self.thin,
            anneal_sweeps: self.anneal_sweeps,
            seed: 0,
        }
    }

    pub fn annealer(&self) -> SimAnnealSampler {
        SimAnnealSampler {
            beta_start: self.beta_start,
            beta_sim: self.beta_sim,
            clamp: self.clamp.then(HardwareRange::default),
        }
    }

    pub fn estimator(&self) -> NegativeEstimator {
        match self.estimator {
            EstimatorKind::RecomputeHidden => NegativeEstimator::RecomputeHidden,
            EstimatorKind::SampledHidden => NegativeEstimator::SampledHidden,
        }
    }

    /// Seed of trial `index`.
    pub fn trial_seed(&self, index: usize) -> u64 {
        self.seed.wrapping_add(index as u64)
    }
}

/// Merges every section into one table. A key may appear only once.
fn flatten(table: Table) -> Result<Table> {
    let mut flat = Table::new();
    for (section, value) in table {
        let entries = match value {
            Value::Table(t) => t,
            other => {
                let mut t = Table::new();
                t.insert(section.clone(), other);
                t
            }
        };
        for (key, v) in entries {
            if flat.insert(key.clone(), v).is_some() {
                return Err(AppError::Config(format!(
                    "key `{key}` appears in more than one section"
                )));
            }
        }
    }
    Ok(flat)
}

/// Reads a command-line value as a TOML literal, falling back to a string.
fn parse_scalar(raw: &str) -> Value {
    format!("v = {raw}")
        .parse::<Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_owned()))
}

/// Pairs up `--key value` arguments.
pub fn parse_overrides(args: &[String]) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    let mut it = args.iter();
    while let Some(flag) = it.next() {
        let key = flag
            .strip_prefix("--")
            .ok_or_else(|| AppError::Config(format!("expected `--key value`, got `{flag}`")))?;
        if let Some((k, v)) = key.split_once('=') {
            out.push((k.to_owned(), v.to_owned()));
            continue;
        }
        let value = it
            .next()
            .ok_or_else(|| AppError::Config(format!("missing value for `--{key}`")))?;
        out.push((key.to_owned(), value.clone()));
    }
    Ok(out)
}
