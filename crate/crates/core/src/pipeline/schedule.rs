//! Learning-rate schedules: cosine annealing with warm restarts and
//! linear warmup followed by linear decay.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchedulerKind {
    CosineWarmRestarts,
    WarmupLinearDown,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SchedulerSpec {
    pub kind: SchedulerKind,
    /// Defaults to the optimizer's peak learning rate when unset.
    #[serde(default)]
    pub peak_lr: Option<f64>,
    #[serde(default)]
    pub min_lr: f64,
    /// First cosine cycle length, in epochs.
    #[serde(default = "default_t0")]
    pub t0: u32,
    /// Cycle length multiplier per restart.
    #[serde(default = "default_t_mult")]
    pub t_mult: u32,
    #[serde(default)]
    pub warmup_epochs: u32,
    #[serde(default)]
    pub down_epochs: u32,
}

fn default_t0() -> u32 {
    10
}
fn default_t_mult() -> u32 {
    2
}

impl SchedulerSpec {
    pub fn cosine(peak_lr: f64, t0: u32, t_mult: u32) -> Self {
        Self {
            kind: SchedulerKind::CosineWarmRestarts,
            peak_lr: Some(peak_lr),
            min_lr: 0.0,
            t0,
            t_mult,
            warmup_epochs: 0,
            down_epochs: 0,
        }
    }

    pub fn warmup_linear_down(peak_lr: f64, warmup: u32, down: u32) -> Self {
        Self {
            kind: SchedulerKind::WarmupLinearDown,
            peak_lr: Some(peak_lr),
            min_lr: 0.0,
            t0: 0,
            t_mult: 1,
            warmup_epochs: warmup,
            down_epochs: down,
        }
    }

    pub fn validate(&self, max_epochs: u32) -> Result<()> {
        match self.kind {
            SchedulerKind::CosineWarmRestarts => {
                if self.t0 == 0 {
                    return Err(Error::Config("scheduler.t0 must be positive".into()));
                }
                if self.t_mult == 0 {
                    return Err(Error::Config("scheduler.t_mult must be positive".into()));
                }
            }
            SchedulerKind::WarmupLinearDown => {
                if self.warmup_epochs + self.down_epochs != max_epochs {
                    return Err(Error::Config(format!(
                        "warmup_epochs + down_epochs ({} + {}) must equal max_epochs ({max_epochs})",
                        self.warmup_epochs, self.down_epochs
                    )));
                }
            }
        }
        if self.min_lr < 0.0 {
            return Err(Error::Config("scheduler.min_lr must be nonnegative".into()));
        }
        Ok(())
    }

    /// Learning rate at a (possibly fractional) epoch.
    pub fn lr_at(&self, epoch: f64, peak_lr: f64) -> f64 {
        let peak = self.peak_lr.unwrap_or(peak_lr);
        match self.kind {
            SchedulerKind::CosineWarmRestarts => {
                lr_cosine_warm_restarts(epoch, peak, self.min_lr, self.t0, self.t_mult)
            }
            SchedulerKind::WarmupLinearDown => lr_warmup_linear_down(
                epoch,
                peak,
                self.min_lr,
                self.warmup_epochs,
                self.down_epochs,
            ),
        }
    }
}

/// Cosine annealing with warm restarts: within a cycle of length `t_i`,
/// `lr = min + (peak - min) * (1 + cos(pi * t_cur / t_i)) / 2`; cycle `i`
/// has length `t0 * t_mult^i` and `t_cur` resets at each restart.
pub fn lr_cosine_warm_restarts(epoch: f64, peak_lr: f64, min_lr: f64, t0: u32, t_mult: u32) -> f64 {
    assert!(epoch >= 0.0 && t0 > 0 && t_mult > 0);
    let mut cycle_start = 0.0f64;
    let mut cycle_len = t0 as f64;
    while epoch >= cycle_start + cycle_len {
        cycle_start += cycle_len;
        cycle_len *= t_mult as f64;
    }
    let t_cur = epoch - cycle_start;
    min_lr + 0.5 * (peak_lr - min_lr) * (1.0 + (std::f64::consts::PI * t_cur / cycle_len).cos())
}

/// Linear ramp from 0 to `peak_lr` over `warmup` epochs, then linear
/// decay from `peak_lr` to `min_lr` over `down` epochs.
pub fn lr_warmup_linear_down(epoch: f64, peak_lr: f64, min_lr: f64, warmup: u32, down: u32) -> f64 {
    let (w, d) = (warmup as f64, down as f64);
    if epoch <= 0.0 {
        return if warmup == 0 { peak_lr } else { 0.0 };
    }
    if epoch < w {
        return peak_lr * epoch / w;
    }
    if d == 0.0 || epoch >= w + d {
        return min_lr;
    }
    peak_lr + (min_lr - peak_lr) * (epoch - w) / d
}
