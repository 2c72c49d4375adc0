//! Orchestration of the three training stages and their run artifacts.
//!
//! A run directory contains `config.json` (the resolved configuration),
//! `checkpoint.c2s`, `metrics.json`, and `train_log.csv`.

pub mod config;
pub mod schedule;
pub mod train;

pub use config::{OptimizerConfig, OptimizerName, StageConfig};
pub use schedule::{lr_cosine_warm_restarts, lr_warmup_linear_down, SchedulerKind, SchedulerSpec};
pub use train::{
    prepare_data, teacher_logits, train_baseline, train_stage1, train_stage2, train_stage3,
    PreparedData, RunOutput, TeacherSet,
};

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::dataset::{Manifest, Split};
use crate::error::{Error, Result};
use crate::eval;
use crate::models::Checkpoint;

pub struct RunSummary {
    pub output: RunOutput,
    pub run_dir: PathBuf,
    pub checkpoint_path: PathBuf,
}

/// Run the stage described by `cfg` against `manifest` and write the
/// run directory under `out_dir`.
pub fn execute_stage(cfg: &StageConfig, manifest: &Manifest, out_dir: &Path) -> Result<RunSummary> {
    cfg.validate()?;
    let data = prepare_data(cfg, manifest)?;
    let output = match cfg.stage {
        1 => train_stage1(cfg, manifest, &data)?,
        2 => {
            let path = cfg
                .city_checkpoint
                .as_ref()
                .ok_or_else(|| Error::Config("stage 2 requires city_checkpoint".into()))?;
            let city = Checkpoint::load(path)?;
            train_stage2(&city, cfg, manifest, &data)?
        }
        3 => {
            if cfg.teacher_checkpoints.is_empty() {
                return Err(Error::NoTeachers);
            }
            let teachers = TeacherSet::load(&cfg.teacher_checkpoints)?;
            train_stage3(cfg, &teachers, manifest, &data)?
        }
        other => return Err(Error::Config(format!("unknown stage {other}"))),
    };
    write_run_dir(cfg, manifest, &data, output, out_dir)
}

/// Persist a finished run: resolved config, checkpoint, metrics, and the
/// per-epoch training log.
pub fn write_run_dir(
    cfg: &StageConfig,
    manifest: &Manifest,
    data: &PreparedData,
    output: RunOutput,
    out_dir: &Path,
) -> Result<RunSummary> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let config_json =
        serde_json::to_string_pretty(&cfg.snapshot()).expect("config snapshot serializes");
    std::fs::write(out_dir.join("config.json"), config_json)
        .map_err(|e| Error::io(out_dir, e))?;

    let checkpoint_path = out_dir.join("checkpoint.c2s");
    output.checkpoint.save(&checkpoint_path)?;

    // Full metrics on the test split when one exists, else on train.
    let metrics_split = if data.test_idx.is_empty() {
        Split::Train
    } else {
        Split::Test
    };
    let metrics =
        eval::evaluate_with_features(&output.checkpoint, manifest, &data.specs, metrics_split)?;
    std::fs::write(out_dir.join("metrics.json"), metrics.to_json())
        .map_err(|e| Error::io(out_dir, e))?;

    let mut log = String::from(
        "epoch,lr,loss_scene,loss_city2scene,train_accuracy,val_accuracy,test_accuracy\n",
    );
    for row in &output.log {
        writeln!(
            log,
            "{},{},{},{},{},{},{}",
            row.epoch,
            row.lr,
            row.loss_scene,
            row.loss_city2scene,
            row.train_accuracy,
            row.val_accuracy.map(|v| v.to_string()).unwrap_or_default(),
            row.test_accuracy,
        )
        .expect("string write");
    }
    std::fs::write(out_dir.join("train_log.csv"), log).map_err(|e| Error::io(out_dir, e))?;

    if !output.warnings.is_empty() {
        let text = output.warnings.join("\n") + "\n";
        std::fs::write(out_dir.join("warnings.txt"), text).map_err(|e| Error::io(out_dir, e))?;
    }

    Ok(RunSummary {
        output,
        run_dir: out_dir.to_path_buf(),
        checkpoint_path,
    })
}
