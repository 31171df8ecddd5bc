//! Optimizers, learning-rate schedules and the training loops for the
//! language model and both classifier branches.

mod classifier;
mod config;
mod lm;
mod optim;
mod schedule;

pub use classifier::{evaluate_classifier, train_classifier, ClassifierTrainer, TrainReport};
pub use config::{LrSchedule, Metric, TrainConfig};
pub use lm::{build_lm_vocab, finetune_lm, lm_windows, pretrain_lm, LmCorpus, LmReport};
pub use optim::{Optimizer, OptimizerKind, StepStats};
pub use schedule::{discriminative_lrs, stlr, unfreeze_schedule, StlrSchedule};

use crate::error::Result;

/// One line of the training log.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub split: &'static str,
    pub loss: f64,
    pub metric_name: &'static str,
    pub metric_value: f64,
}

impl EpochRecord {
    /// `epoch split loss metric_name metric_value`, tab-separated.
    pub fn to_line(&self) -> String {
        format!(
            "{}\t{}\t{:.6}\t{}\t{:.6}",
            self.epoch, self.split, self.loss, self.metric_name, self.metric_value
        )
    }
}

/// Per-group learning rates for every step of a run.
#[derive(Debug, Clone)]
pub(crate) struct LrPlan {
    schedule: Option<StlrSchedule>,
    base: f64,
    decay: Option<f64>,
    n_groups: usize,
}

impl LrPlan {
    pub(crate) fn new(cfg: &TrainConfig, total_steps: usize, n_groups: usize) -> Result<Self> {
        let schedule = match cfg.schedule {
            LrSchedule::Stlr => Some(StlrSchedule::for_run(total_steps, cfg.cut_frac, cfg.ratio, cfg.lr)?),
            LrSchedule::Constant => None,
        };
        Ok(LrPlan {
            schedule,
            base: cfg.lr,
            decay: cfg.discriminative.then_some(cfg.decay),
            n_groups,
        })
    }

    pub(crate) fn rates(&self, step: usize) -> Result<Vec<f64>> {
        let base = match &self.schedule {
            Some(s) => s.lr(step.min(s.total()))?,
            None => self.base,
        };
        match self.decay {
            Some(d) => discriminative_lrs(base, self.n_groups, d),
            None => Ok(vec![base; self.n_groups]),
        }
    }
}

/// Independent per-example RNG seed derived from the run seed and position.
pub(crate) fn mix_seed(seed: u64, a: u64, b: u64) -> u64 {
    let mut x = seed ^ a.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ b.wrapping_mul(0xc2b2_ae3d_27d4_eb4f);
    x ^= x >> 31;
    x = x.wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x ^ (x >> 29)
}
