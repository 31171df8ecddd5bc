//! Flat `key = value` run configuration.
//!
//! ```text
//! # comment
//! hidden_dim = 64
//! optimizer = adam
//! clip = none
//! ```

use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::nn::{LinearConfig, LmConfig, ModelConfig};
use crate::text::Granularity;
use crate::train::{LrSchedule, Metric, OptimizerKind, TrainConfig};

/// Every knob a command may read. Sizes that depend on data (vocabulary,
/// classes) are filled in by the command.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub min_freq: usize,
    pub max_vocab: Option<usize>,
    pub lambda: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            model: ModelConfig::default(),
            train: TrainConfig::default(),
            min_freq: 1,
            max_vocab: None,
            lambda: LinearConfig::default().lambda,
        }
    }
}

pub const KEYS: &[&str] = &[
    "embed_dim",
    "hidden_dim",
    "n_layers",
    "bidirectional",
    "attention",
    "attention_dim",
    "dropout",
    "min_freq",
    "max_vocab",
    "epochs",
    "batch_size",
    "seed",
    "optimizer",
    "beta1",
    "beta2",
    "eps",
    "lr",
    "schedule",
    "cut_frac",
    "ratio",
    "decay",
    "discriminative",
    "unfreeze",
    "patience",
    "metric",
    "target",
    "clip",
    "bptt",
    "sort_by_length",
    "lambda",
];

fn parse<T: FromStr>(v: &str, what: &str) -> std::result::Result<T, String> {
    v.parse().map_err(|_| format!("expected {what}, got `{v}`"))
}

fn at_least(v: &str, min: usize) -> std::result::Result<usize, String> {
    let n: usize = parse(v, "a non-negative integer")?;
    if n < min {
        return Err(format!("must be >= {min}, got {n}"));
    }
    Ok(n)
}

fn float_in(v: &str, ok: impl Fn(f64) -> bool, range: &str) -> std::result::Result<f64, String> {
    let x: f64 = parse(v, "a number")?;
    if !x.is_finite() || !ok(x) {
        return Err(format!("must be {range}, got {v}"));
    }
    Ok(x)
}

fn optional<T>(v: &str, f: impl Fn(&str) -> std::result::Result<T, String>) -> std::result::Result<Option<T>, String> {
    if v == "none" {
        Ok(None)
    } else {
        f(v).map(Some)
    }
}

impl RunConfig {
    fn set(&mut self, key: &str, v: &str) -> std::result::Result<(), String> {
        let m = &mut self.model;
        let t = &mut self.train;
        match key {
            "embed_dim" => m.embed_dim = at_least(v, 1)?,
            "hidden_dim" => m.hidden_dim = at_least(v, 1)?,
            "n_layers" => m.n_layers = at_least(v, 1)?,
            "bidirectional" => m.bidirectional = parse(v, "true or false")?,
            "attention" => m.attention = parse(v, "true or false")?,
            "attention_dim" => m.attention_dim = at_least(v, 1)?,
            "dropout" => m.dropout = float_in(v, |x| (0.0..1.0).contains(&x), "in [0, 1)")?,
            "min_freq" => self.min_freq = at_least(v, 1)?,
            "max_vocab" => self.max_vocab = optional(v, |v| at_least(v, 1))?,
            "epochs" => t.epochs = at_least(v, 1)?,
            "batch_size" => t.batch_size = at_least(v, 1)?,
            "seed" => t.seed = parse(v, "a non-negative integer")?,
            "optimizer" => {
                let kind: OptimizerKind = v.parse().map_err(|e: Error| e.to_string())?;
                t.optimizer = match (kind, t.optimizer) {
                    (OptimizerKind::Adam { .. }, prev @ OptimizerKind::Adam { .. }) => prev,
                    (k, _) => k,
                };
            }
            "beta1" | "beta2" | "eps" => {
                let OptimizerKind::Adam { beta1, beta2, eps } = &mut t.optimizer else {
                    return Err("only applies with optimizer = adam (set optimizer first)".into());
                };
                match key {
                    "beta1" => *beta1 = float_in(v, |x| (0.0..1.0).contains(&x), "in [0, 1)")?,
                    "beta2" => *beta2 = float_in(v, |x| (0.0..1.0).contains(&x), "in [0, 1)")?,
                    _ => *eps = float_in(v, |x| x > 0.0, "> 0")?,
                }
            }
            "lr" => t.lr = float_in(v, |x| x > 0.0, "> 0")?,
            "schedule" => t.schedule = v.parse::<LrSchedule>().map_err(|e| e.to_string())?,
            "cut_frac" => t.cut_frac = float_in(v, |x| x > 0.0 && x < 1.0, "in (0, 1)")?,
            "ratio" => t.ratio = float_in(v, |x| x >= 1.0, ">= 1")?,
            "decay" => t.decay = float_in(v, |x| x > 1.0, "> 1")?,
            "discriminative" => t.discriminative = parse(v, "true or false")?,
            "unfreeze" => t.unfreeze = parse(v, "true or false")?,
            "patience" => t.patience = at_least(v, 1)?,
            "metric" => t.metric = v.parse::<Metric>().map_err(|e| e.to_string())?,
            "target" => t.target = optional(v, |v| float_in(v, |x| (0.0..=1.0).contains(&x), "in [0, 1]"))?,
            "clip" => t.clip = optional(v, |v| float_in(v, |x| x > 0.0, "> 0"))?,
            "bptt" => t.bptt = at_least(v, 1)?,
            "sort_by_length" => t.sort_by_length = parse(v, "true or false")?,
            "lambda" => self.lambda = float_in(v, |x| x > 0.0, "> 0")?,
            _ => return Err("unknown key".into()),
        }
        Ok(())
    }

    fn get(&self, key: &str) -> String {
        let m = &self.model;
        let t = &self.train;
        let opt = |o: Option<String>| o.unwrap_or_else(|| "none".into());
        let adam = match t.optimizer {
            OptimizerKind::Adam { beta1, beta2, eps } => (beta1, beta2, eps),
            OptimizerKind::Sgd => (0.0, 0.0, 0.0),
        };
        match key {
            "embed_dim" => m.embed_dim.to_string(),
            "hidden_dim" => m.hidden_dim.to_string(),
            "n_layers" => m.n_layers.to_string(),
            "bidirectional" => m.bidirectional.to_string(),
            "attention" => m.attention.to_string(),
            "attention_dim" => m.attention_dim.to_string(),
            "dropout" => m.dropout.to_string(),
            "min_freq" => self.min_freq.to_string(),
            "max_vocab" => opt(self.max_vocab.map(|v| v.to_string())),
            "epochs" => t.epochs.to_string(),
            "batch_size" => t.batch_size.to_string(),
            "seed" => t.seed.to_string(),
            "optimizer" => t.optimizer.to_string(),
            "beta1" => adam.0.to_string(),
            "beta2" => adam.1.to_string(),
            "eps" => adam.2.to_string(),
            "lr" => t.lr.to_string(),
            "schedule" => t.schedule.name().into(),
            "cut_frac" => t.cut_frac.to_string(),
            "ratio" => t.ratio.to_string(),
            "decay" => t.decay.to_string(),
            "discriminative" => t.discriminative.to_string(),
            "unfreeze" => t.unfreeze.to_string(),
            "patience" => t.patience.to_string(),
            "metric" => t.metric.name().into(),
            "target" => opt(t.target.map(|v| v.to_string())),
            "clip" => opt(t.clip.map(|v| v.to_string())),
            "bptt" => t.bptt.to_string(),
            "sort_by_length" => t.sort_by_length.to_string(),
            "lambda" => self.lambda.to_string(),
            _ => unreachable!("get() is only called with manifest keys"),
        }
    }

    /// Blank lines and `#` comments are skipped; absent keys keep their
    /// defaults. A key may appear once.
    pub fn parse(content: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut seen = std::collections::BTreeSet::new();
        for (i, raw) in content.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("expected `key = value`, got `{line}`"),
                });
            };
            let (key, value) = (key.trim(), value.trim());
            let fail = |msg: String| Error::Config {
                key: key.to_string(),
                line: line_no,
                msg,
            };
            if !seen.insert(key.to_string()) && KEYS.contains(&key) {
                return Err(fail("set more than once".into()));
            }
            cfg.set(key, value).map_err(fail)?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let content = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&content)
    }

    /// Every key with its effective value, one `key = value` per line.
    /// Adam's constants are left out under SGD.
    pub fn render(&self) -> String {
        let sgd = self.train.optimizer == OptimizerKind::Sgd;
        KEYS.iter()
            .filter(|k| !(sgd && matches!(**k, "beta1" | "beta2" | "eps")))
            .map(|k| format!("{k} = {}\n", self.get(k)))
            .collect()
    }

    pub fn model_config(&self, granularity: Granularity, vocab_size: usize, n_classes: usize) -> ModelConfig {
        ModelConfig {
            granularity,
            vocab_size,
            n_classes,
            ..self.model.clone()
        }
    }

    pub fn lm_config(&self, vocab_size: usize) -> LmConfig {
        LmConfig {
            embed_dim: self.model.embed_dim,
            hidden_dim: self.model.hidden_dim,
            n_layers: self.model.n_layers,
            dropout: self.model.dropout,
            vocab_size,
        }
    }

    pub fn linear_config(&self) -> LinearConfig {
        LinearConfig {
            epochs: self.train.epochs,
            lambda: self.lambda,
            seed: self.train.seed,
        }
    }
}
