use std::fmt;
use std::str::FromStr;

use super::optim::OptimizerKind;
use crate::error::{Error, Result};

/// Validation metric used for early stopping and checkpoint selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Accuracy,
    /// Macro-averaged F1 over the label catalog.
    F1,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::Accuracy => "accuracy",
            Metric::F1 => "f1",
        }
    }

    pub fn of(self, report: &crate::eval::MetricsReport) -> f64 {
        match self {
            Metric::Accuracy => report.accuracy,
            Metric::F1 => report.macro_avg.f1,
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "accuracy" => Ok(Metric::Accuracy),
            "f1" => Ok(Metric::F1),
            other => Err(Error::Param(format!(
                "unknown metric `{other}` (expected accuracy or f1)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LrSchedule {
    /// Slanted triangular over the whole run.
    Stlr,
    Constant,
}

impl LrSchedule {
    pub fn name(self) -> &'static str {
        match self {
            LrSchedule::Stlr => "stlr",
            LrSchedule::Constant => "constant",
        }
    }
}

impl FromStr for LrSchedule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "stlr" => Ok(LrSchedule::Stlr),
            "constant" => Ok(LrSchedule::Constant),
            other => Err(Error::Param(format!(
                "unknown schedule `{other}` (expected stlr or constant)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub optimizer: OptimizerKind,
    /// Peak rate for STLR, or the fixed rate for a constant schedule.
    pub lr: f64,
    pub schedule: LrSchedule,
    pub cut_frac: f64,
    pub ratio: f64,
    pub decay: f64,
    pub discriminative: bool,
    pub unfreeze: bool,
    pub patience: usize,
    pub metric: Metric,
    /// Stop as soon as the validation metric reaches this value.
    pub target: Option<f64>,
    /// Global gradient-norm threshold; `None` disables clipping.
    pub clip: Option<f64>,
    /// Truncated-BPTT window for language-model training.
    pub bptt: usize,
    pub sort_by_length: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 10,
            batch_size: 16,
            seed: 42,
            optimizer: OptimizerKind::adam(),
            lr: 0.01,
            schedule: LrSchedule::Stlr,
            cut_frac: 0.1,
            ratio: 32.0,
            decay: 2.6,
            discriminative: false,
            unfreeze: false,
            patience: 3,
            metric: Metric::Accuracy,
            target: None,
            clip: Some(5.0),
            bptt: 20,
            sort_by_length: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("epochs", self.epochs),
            ("batch_size", self.batch_size),
            ("patience", self.patience),
            ("bptt", self.bptt),
        ];
        if let Some((k, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Param(format!("{k} must be >= 1")));
        }
        if !(self.lr > 0.0) {
            return Err(Error::Param(format!("lr {} must be > 0", self.lr)));
        }
        if !(self.cut_frac > 0.0 && self.cut_frac < 1.0) {
            return Err(Error::Param(format!("cut_frac {} outside (0, 1)", self.cut_frac)));
        }
        if !(self.ratio >= 1.0) {
            return Err(Error::Param(format!("ratio {} must be >= 1", self.ratio)));
        }
        if self.discriminative && !(self.decay > 1.0) {
            return Err(Error::Param(format!("decay {} must be > 1", self.decay)));
        }
        if let Some(c) = self.clip {
            if !(c > 0.0) {
                return Err(Error::Param(format!("clip {c} must be > 0")));
            }
        }
        if let OptimizerKind::Adam { beta1, beta2, eps } = self.optimizer {
            if !(0.0..1.0).contains(&beta1) || !(0.0..1.0).contains(&beta2) || !(eps > 0.0) {
                return Err(Error::Param("adam needs beta1, beta2 in [0, 1) and eps > 0".into()));
            }
        }
        Ok(())
    }
}
