//! Stage configuration: one document drives a whole training run.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::augment::AugmentConfig;
use crate::error::{Error, Result};
use crate::features::SpectrogramConfig;
use crate::losses::KdConfig;
use crate::models::EncoderSpec;
use crate::pipeline::schedule::SchedulerSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerName {
    Adam,
    AdamW,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct OptimizerConfig {
    pub name: OptimizerName,
    pub peak_lr: f64,
    #[serde(default)]
    pub weight_decay: f64,
}

/// Configuration for one training stage. Stages of one experiment are
/// expected to share the backbone and preprocessing settings.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct StageConfig {
    /// 1 = city classifier, 2 = frozen-feature scene probe,
    /// 3 = distilled student.
    pub stage: u8,
    pub seed: u64,
    pub max_epochs: u32,
    pub batch_size: usize,
    pub model: EncoderSpec,
    pub preprocessing: SpectrogramConfig,
    #[serde(default)]
    pub augment: AugmentConfig,
    pub optimizer: OptimizerConfig,
    pub scheduler: SchedulerSpec,
    /// Distillation settings; required for stage 3.
    #[serde(default)]
    pub kd: Option<KdConfig>,
    /// Teacher checkpoint paths; required for stage 3.
    #[serde(default)]
    pub teacher_checkpoints: Vec<PathBuf>,
    /// Stage-1 checkpoint to freeze; required for stage 2.
    #[serde(default)]
    pub city_checkpoint: Option<PathBuf>,
    /// Carve this stratified fraction out of the train split for
    /// validation-based tuning.
    #[serde(default)]
    pub val_fraction: Option<f64>,
    /// Compute teacher logits once on clean inputs and remix the cached
    /// values with the mixup coefficients, instead of running teachers
    /// on every augmented batch. An approximation: stripe masking and
    /// statistics mixing are not reflected in the cached logits.
    #[serde(default)]
    pub teacher_logit_cache: bool,
    /// On-disk feature cache directory.
    #[serde(default)]
    pub feature_cache_dir: Option<PathBuf>,
}

impl StageConfig {
    /// Validate the whole document, collecting every offending field.
    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if !(1..=3).contains(&self.stage) {
            bad.push(format!("stage must be 1, 2, or 3, got {}", self.stage));
        }
        if self.max_epochs == 0 {
            bad.push("max_epochs must be positive".into());
        }
        if self.batch_size == 0 {
            bad.push("batch_size must be positive".into());
        }
        if let Err(e) = self.model.validate() {
            bad.push(format!("model: {e}"));
        }
        if let Err(e) = self.preprocessing.validate() {
            bad.push(format!("preprocessing: {e}"));
        }
        if let Err(e) = self.augment.validate() {
            bad.push(format!("augment: {e}"));
        }
        if !(self.optimizer.peak_lr > 0.0) {
            bad.push(format!(
                "optimizer.peak_lr must be positive, got {}",
                self.optimizer.peak_lr
            ));
        }
        if self.optimizer.weight_decay < 0.0 {
            bad.push("optimizer.weight_decay must be nonnegative".into());
        }
        if let Err(e) = self.scheduler.validate(self.max_epochs) {
            bad.push(format!("scheduler: {e}"));
        }
        if self.model.n_mels != self.preprocessing.n_mels {
            bad.push(format!(
                "model.n_mels ({}) must match preprocessing.n_mels ({})",
                self.model.n_mels, self.preprocessing.n_mels
            ));
        }
        if self.stage == 3 {
            match &self.kd {
                None => bad.push("stage 3 requires a kd section".into()),
                Some(kd) => {
                    if let Err(e) = kd.validate() {
                        bad.push(format!("kd: {e}"));
                    }
                }
            }
        }
        if self.stage == 2 && self.city_checkpoint.is_none() {
            bad.push("stage 2 requires city_checkpoint".into());
        }
        if let Some(v) = self.val_fraction {
            if !(v > 0.0 && v < 1.0) {
                bad.push(format!("val_fraction must be in (0, 1), got {v}"));
            }
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::ConfigFields(bad))
        }
    }

    pub fn snapshot(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::schedule::SchedulerKind;

    pub(crate) fn sample_config(stage: u8) -> StageConfig {
        StageConfig {
            stage,
            seed: 1,
            max_epochs: 10,
            batch_size: 16,
            model: EncoderSpec {
                n_mels: 32,
                embedding_dim: 16,
                widths: [8, 8, 16],
                plugin: None,
            },
            preprocessing: SpectrogramConfig {
                sample_rate_hz: 16_000,
                window_ms: 64.0,
                hop_ms: 32.0,
                n_mels: 32,
                fmin_hz: 0.0,
                fmax_hz: None,
                log_offset: 1e-5,
            },
            augment: AugmentConfig::default(),
            optimizer: OptimizerConfig {
                name: OptimizerName::Adam,
                peak_lr: 0.01,
                weight_decay: 0.0,
            },
            scheduler: SchedulerSpec::cosine(0.01, 10, 2),
            kd: None,
            teacher_checkpoints: Vec::new(),
            city_checkpoint: None,
            val_fraction: None,
            teacher_logit_cache: false,
            feature_cache_dir: None,
        }
    }

    #[test]
    fn valid_config_passes() {
        sample_config(1).validate().unwrap();
    }

    #[test]
    fn stage3_requires_kd() {
        let cfg = sample_config(3);
        match cfg.validate() {
            Err(Error::ConfigFields(fields)) => {
                assert!(fields.iter().any(|f| f.contains("kd")), "{fields:?}")
            }
            other => panic!("expected field errors, got {other:?}"),
        }
    }

    #[test]
    fn stage2_requires_city_checkpoint() {
        let cfg = sample_config(2);
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn collects_multiple_offenders() {
        let mut cfg = sample_config(1);
        cfg.max_epochs = 0;
        cfg.batch_size = 0;
        cfg.optimizer.peak_lr = -1.0;
        match cfg.validate() {
            Err(Error::ConfigFields(fields)) => assert!(fields.len() >= 3, "{fields:?}"),
            other => panic!("expected field errors, got {other:?}"),
        }
    }

    #[test]
    fn mel_dims_must_agree() {
        let mut cfg = sample_config(1);
        cfg.preprocessing.n_mels = 64;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn scheduler_budget_checked() {
        let mut cfg = sample_config(1);
        cfg.scheduler = SchedulerSpec {
            kind: SchedulerKind::WarmupLinearDown,
            peak_lr: None,
            min_lr: 0.0,
            t0: 0,
            t_mult: 1,
            warmup_epochs: 3,
            down_epochs: 5,
        };
        assert!(cfg.validate().is_err()); // 3 + 5 != 10
        cfg.max_epochs = 8;
        cfg.validate().unwrap();
    }

    #[test]
    fn config_json_round_trip() {
        let cfg = sample_config(3);
        let json = serde_json::to_string_pretty(&cfg).unwrap();
        let back: StageConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back, cfg);
    }
}
