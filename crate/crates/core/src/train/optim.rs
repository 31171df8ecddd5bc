use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::tensor::ParamStore;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OptimizerKind {
    Sgd,
    Adam { beta1: f64, beta2: f64, eps: f64 },
}

impl OptimizerKind {
    pub fn adam() -> Self {
        OptimizerKind::Adam {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            OptimizerKind::Sgd => "sgd",
            OptimizerKind::Adam { .. } => "adam",
        }
    }
}

impl fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OptimizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sgd" => Ok(OptimizerKind::Sgd),
            "adam" => Ok(OptimizerKind::adam()),
            other => Err(Error::Param(format!(
                "unknown optimizer `{other}` (expected sgd or adam)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Default)]
struct Moments {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepStats {
    /// Global L2 norm of the trainable gradients before clipping.
    pub grad_norm: f64,
    /// Factor applied to every gradient (1 when no clipping happened).
    pub clip_scale: f64,
}

/// SGD or Adam with optional global-norm clipping. Parameters that are frozen
/// or have no gradient are left untouched, including their Adam moments.
#[derive(Debug, Clone)]
pub struct Optimizer {
    kind: OptimizerKind,
    clip: Option<f64>,
    moments: Vec<Moments>,
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, clip: Option<f64>) -> Self {
        Optimizer {
            kind,
            clip,
            moments: Vec::new(),
        }
    }

    pub fn kind(&self) -> OptimizerKind {
        self.kind
    }

    /// Applies one update with `group_lrs[param.group]` as each tensor's rate.
    pub fn step(&mut self, store: &mut ParamStore, group_lrs: &[f64]) -> Result<StepStats> {
        let mut sq = 0.0;
        for (_, p) in store.iter() {
            if !p.tensor.requires_grad() {
                continue;
            }
            if let Some(g) = p.tensor.grad() {
                if let Some(bad) = g.iter().find(|v| !v.is_finite()) {
                    return Err(Error::Training(format!("gradient of `{}` contains {bad}", p.name)));
                }
                if p.group >= group_lrs.len() {
                    return Err(Error::Param(format!(
                        "`{}` is in group {} but only {} learning rates were given",
                        p.name,
                        p.group,
                        group_lrs.len()
                    )));
                }
                sq += g.iter().map(|v| v * v).sum::<f64>();
            }
        }
        let grad_norm = sq.sqrt();
        let clip_scale = match self.clip {
            Some(c) if grad_norm > c => c / grad_norm,
            _ => 1.0,
        };

        if self.moments.len() < store.len() {
            self.moments.resize_with(store.len(), Moments::default);
        }
        for ((_, p), mom) in store.iter_mut().zip(&mut self.moments) {
            if !p.tensor.requires_grad() {
                continue;
            }
            let lr = group_lrs[p.group];
            let (theta, grad) = p.tensor.values_and_grad();
            let Some(grad) = grad else { continue };
            match self.kind {
                OptimizerKind::Sgd => {
                    for (w, g) in theta.iter_mut().zip(grad) {
                        *w -= lr * g * clip_scale;
                    }
                }
                OptimizerKind::Adam { beta1, beta2, eps } => {
                    if mom.m.is_empty() {
                        mom.m = vec![0.0; theta.len()];
                        mom.v = vec![0.0; theta.len()];
                    }
                    mom.t += 1;
                    let bc1 = 1.0 - beta1.powi(mom.t as i32);
                    let bc2 = 1.0 - beta2.powi(mom.t as i32);
                    for i in 0..theta.len() {
                        let g = grad[i] * clip_scale;
                        mom.m[i] = beta1 * mom.m[i] + (1.0 - beta1) * g;
                        mom.v[i] = beta2 * mom.v[i] + (1.0 - beta2) * g * g;
                        let mhat = mom.m[i] / bc1;
                        let vhat = mom.v[i] / bc2;
                        theta[i] -= lr * mhat / (vhat.sqrt() + eps);
                    }
                }
            }
        }
        Ok(StepStats { grad_norm, clip_scale })
    }
}
