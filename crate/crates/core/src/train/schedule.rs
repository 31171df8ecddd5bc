use crate::error::{Error, Result};

/// Slanted triangular learning rate: a short linear warm-up to `lr_max` at
/// step `cut`, then a long linear decay back to `lr_max / ratio` at step `total`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StlrSchedule {
    total: usize,
    cut: usize,
    ratio: f64,
    lr_max: f64,
}

impl StlrSchedule {
    pub fn new(total: usize, cut_frac: f64, ratio: f64, lr_max: f64) -> Result<Self> {
        if !(cut_frac > 0.0 && cut_frac < 1.0) {
            return Err(Error::Param(format!("cut_frac {cut_frac} outside (0, 1)")));
        }
        if !(ratio >= 1.0) {
            return Err(Error::Param(format!("ratio {ratio} must be >= 1")));
        }
        if !(lr_max > 0.0) {
            return Err(Error::Param(format!("lr_max {lr_max} must be > 0")));
        }
        let cut = (total as f64 * cut_frac).floor() as usize;
        if cut == 0 {
            return Err(Error::Param(format!(
                "schedule with {total} steps and cut_frac {cut_frac} has no warm-up step"
            )));
        }
        Ok(StlrSchedule {
            total,
            cut,
            ratio,
            lr_max,
        })
    }

    /// Like [`StlrSchedule::new`] but short runs get a one-step warm-up
    /// instead of an error.
    pub fn for_run(total: usize, cut_frac: f64, ratio: f64, lr_max: f64) -> Result<Self> {
        let total = total.max(1);
        match Self::new(total, cut_frac, ratio, lr_max) {
            Err(Error::Param(_)) if cut_frac > 0.0 && cut_frac < 1.0 && ratio >= 1.0 && lr_max > 0.0 => {
                Ok(StlrSchedule {
                    total,
                    cut: 1,
                    ratio,
                    lr_max,
                })
            }
            other => other,
        }
    }

    pub fn total(&self) -> usize {
        self.total
    }

    pub fn cut(&self) -> usize {
        self.cut
    }

    pub fn lr_max(&self) -> f64 {
        self.lr_max
    }

    pub fn lr(&self, t: usize) -> Result<f64> {
        if t > self.total {
            return Err(Error::contract(format!(
                "step {t} past the end of a {}-step schedule",
                self.total
            )));
        }
        let p = if t < self.cut {
            t as f64 / self.cut as f64
        } else if self.total == self.cut {
            1.0
        } else {
            // equals cut * (1/cut_frac - 1) whenever total * cut_frac is whole
            let decay_len = (self.total - self.cut) as f64;
            (1.0 - (t - self.cut) as f64 / decay_len).max(0.0)
        };
        Ok(self.lr_max * (1.0 + p * (self.ratio - 1.0)) / self.ratio)
    }
}

pub fn stlr(t: usize, schedule: &StlrSchedule) -> Result<f64> {
    schedule.lr(t)
}

/// `base / decay^k` for group `k` (group 0 is the head).
pub fn discriminative_lrs(base: f64, n_groups: usize, decay: f64) -> Result<Vec<f64>> {
    if !(decay > 1.0) {
        return Err(Error::Param(format!("discriminative decay {decay} must be > 1")));
    }
    Ok((0..n_groups).map(|k| base / decay.powi(k as i32)).collect())
}

/// Groups trainable at `epoch` when unfreezing one group per epoch, head first.
pub fn unfreeze_schedule(epoch: usize, n_groups: usize) -> Vec<bool> {
    (0..n_groups).map(|g| g <= epoch).collect()
}
