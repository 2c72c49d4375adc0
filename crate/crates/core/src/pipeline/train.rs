//! The three-stage training engine.
//!
//! Stage 1 trains the city classifier end to end. Stage 2 freezes the
//! city encoder and trains a fresh scene head on its features (the
//! teacher). Stage 3 trains a fresh scene model against ground truth
//! plus the temperature-softened teacher ensemble. A baseline run is the
//! stage-3 loop with no teachers and pure label loss; with the same seed
//! and lambda = 1 both produce bit-identical parameters.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::augment::{self, IrBank, SoftLabels};
use crate::dataset::{Manifest, Split};
use crate::error::{Error, Result};
use crate::features::{self, FeatureCache, SpecBatch, Spectrogram};
use crate::losses::{self, KdConfig, LogitKind, Logits, Target};
use crate::models::nn::{Adam, Trainable};
use crate::models::{
    Checkpoint, Classifier, Encoder, EncoderSpec, LabelKind, LinearClassifier, RefCnnEncoder, Role,
};
use crate::pipeline::config::{OptimizerName, StageConfig};
use crate::util::derive_seed;

// RNG stream tags, combined with the run seed.
const STREAM_INIT: u64 = 0;
const STREAM_SHUFFLE: u64 = 1;
const STREAM_AUGMENT: u64 = 2;
const STREAM_VAL_SPLIT: u64 = 3;

/// Features and integer targets for every manifest record.
pub struct PreparedData {
    pub specs: Vec<Spectrogram>,
    pub scene_targets: Vec<usize>,
    pub city_targets: Vec<usize>,
    pub train_idx: Vec<usize>,
    pub val_idx: Vec<usize>,
    pub test_idx: Vec<usize>,
    /// Waveforms, loaded only when impulse-response augmentation is on.
    pub waveforms: Option<Vec<Vec<f32>>>,
    pub ir_bank: Option<IrBank>,
}

/// Extract features and resolve splits for a run.
pub fn prepare_data(cfg: &StageConfig, manifest: &Manifest) -> Result<PreparedData> {
    cfg.validate()?;
    let cache = match &cfg.feature_cache_dir {
        Some(dir) => Some(FeatureCache::new(dir)?),
        None => None,
    };
    let specs = features::extract_all(manifest, &cfg.preprocessing, cache.as_ref())?;
    let scene_targets = manifest
        .records
        .iter()
        .map(|r| manifest.scene_index(&r.scene_label))
        .collect::<Result<Vec<_>>>()?;
    let city_targets = manifest
        .records
        .iter()
        .map(|r| manifest.city_index(&r.city_label))
        .collect::<Result<Vec<_>>>()?;

    let mut train_idx = manifest.indices_in(Split::Train);
    let test_idx = manifest.indices_in(Split::Test);
    let mut val_idx = Vec::new();
    if let Some(frac) = cfg.val_fraction {
        (train_idx, val_idx) = carve_validation(manifest, &train_idx, frac, cfg.seed);
    }

    let (waveforms, ir_bank) = if cfg.augment.diraug_prob_p > 0.0 {
        let dir = cfg.augment.ir_bank_dir.as_ref().ok_or_else(|| {
            Error::Config("diraug enabled without ir_bank_dir".into())
        })?;
        let bank = IrBank::load(dir, cfg.preprocessing.sample_rate_hz)?;
        if bank.is_empty() {
            return Err(Error::Config(format!(
                "impulse-response bank {} is empty",
                dir.display()
            )));
        }
        let waves: Vec<Result<Vec<f32>>> = crate::par::map_index(manifest.records.len(), |i| {
            features::load_audio(&manifest.records[i].path, cfg.preprocessing.sample_rate_hz)
        });
        let waves = waves.into_iter().collect::<Result<Vec<_>>>()?;
        (Some(waves), Some(bank))
    } else {
        (None, None)
    };

    Ok(PreparedData {
        specs,
        scene_targets,
        city_targets,
        train_idx,
        val_idx,
        test_idx,
        waveforms,
        ir_bank,
    })
}

/// Stratified validation carve-out from the train indices.
fn carve_validation(
    manifest: &Manifest,
    train_idx: &[usize],
    fraction: f64,
    seed: u64,
) -> (Vec<usize>, Vec<usize>) {
    let mut groups: BTreeMap<(String, String), Vec<usize>> = BTreeMap::new();
    for &i in train_idx {
        let r = &manifest.records[i];
        groups
            .entry((r.scene_label.clone(), r.city_label.clone()))
            .or_default()
            .push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, STREAM_VAL_SPLIT));
    let mut train = Vec::new();
    let mut val = Vec::new();
    for (_, mut idxs) in groups {
        if idxs.len() < 2 {
            train.extend(idxs);
            continue;
        }
        idxs.shuffle(&mut rng);
        let n_val = ((idxs.len() as f64 * fraction).round() as usize).clamp(1, idxs.len() - 1);
        val.extend_from_slice(&idxs[..n_val]);
        train.extend_from_slice(&idxs[n_val..]);
    }
    train.sort_unstable();
    val.sort_unstable();
    (train, val)
}

/// A loaded teacher ensemble. All teachers share one scene vocabulary.
pub struct TeacherSet {
    models: Vec<(Box<dyn Encoder>, Box<dyn Classifier>)>,
    pub n_classes: usize,
    pub vocab: Vec<String>,
}

impl TeacherSet {
    pub fn from_checkpoints(checkpoints: &[Checkpoint]) -> Result<Self> {
        let first = checkpoints.first().ok_or(Error::NoTeachers)?;
        if first.target_kind != LabelKind::Scene {
            return Err(Error::InvalidInput(
                "teacher checkpoints must predict scenes".into(),
            ));
        }
        let vocab = first.target_vocab.clone();
        let mut models = Vec::with_capacity(checkpoints.len());
        for (i, ckpt) in checkpoints.iter().enumerate() {
            if !ckpt.frozen_encoder {
                return Err(Error::InvalidInput(format!(
                    "teacher {i} does not have a frozen encoder"
                )));
            }
            if ckpt.target_vocab != vocab {
                return Err(Error::VocabMismatch(format!(
                    "teacher {i} has a different scene vocabulary"
                )));
            }
            models.push(ckpt.build_models()?);
        }
        Ok(Self {
            models,
            n_classes: vocab.len(),
            vocab,
        })
    }

    pub fn load(paths: &[std::path::PathBuf]) -> Result<Self> {
        if paths.is_empty() {
            return Err(Error::NoTeachers);
        }
        let ckpts = paths
            .iter()
            .map(|p| Checkpoint::load(p))
            .collect::<Result<Vec<_>>>()?;
        Self::from_checkpoints(&ckpts)
    }

    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }
}

/// Run every teacher on the same batch in inference mode and average
/// the logits elementwise. No gradients are retained.
pub fn teacher_logits(teachers: &TeacherSet, batch: &SpecBatch) -> Result<Logits> {
    if teachers.is_empty() {
        return Err(Error::NoTeachers);
    }
    let per_teacher: Vec<Logits> = teachers
        .models
        .iter()
        .map(|(enc, clf)| {
            let emb = enc.encode(batch)?;
            let logits = clf.classify(&emb, batch.batch)?;
            Logits::new(
                logits.iter().map(|&v| v as f64).collect(),
                clf.n_classes(),
                LogitKind::CityToScene,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    losses::ensemble_logits(&per_teacher)
}

#[allow(clippy::large_enum_variant)]
enum EncoderKind {
    Trainable(RefCnnEncoder),
    Frozen {
        model: Box<dyn Encoder>,
        spec: EncoderSpec,
        params: Vec<f32>,
    },
}

impl EncoderKind {
    fn encode_eval(&self, batch: &SpecBatch) -> Result<Vec<f32>> {
        match self {
            EncoderKind::Trainable(e) => e.forward_eval(batch),
            EncoderKind::Frozen { model, .. } => model.encode(batch),
        }
    }

    fn export(&self) -> (EncoderSpec, Vec<f32>) {
        match self {
            EncoderKind::Trainable(e) => (e.spec.clone(), e.export_params()),
            EncoderKind::Frozen { spec, params, .. } => (spec.clone(), params.clone()),
        }
    }

    fn hash(&self) -> u64 {
        match self {
            EncoderKind::Trainable(e) => e.param_hash(),
            EncoderKind::Frozen { params, .. } => crate::util::hash_f32(params),
        }
    }
}

/// One row of `train_log.csv`.
#[derive(Debug, Clone)]
pub struct EpochLog {
    pub epoch: u32,
    pub lr: f64,
    pub loss_scene: f64,
    pub loss_city2scene: f64,
    pub train_accuracy: f64,
    pub val_accuracy: Option<f64>,
    pub test_accuracy: f64,
}

pub struct RunOutput {
    pub checkpoint: Checkpoint,
    pub log: Vec<EpochLog>,
    pub warnings: Vec<String>,
    pub train_accuracy: f64,
    pub val_accuracy: Option<f64>,
    pub test_accuracy: f64,
}

/// Stage 1: train encoder + city head with cross-entropy on city labels.
pub fn train_stage1(cfg: &StageConfig, manifest: &Manifest, data: &PreparedData) -> Result<RunOutput> {
    if cfg.stage != 1 {
        return Err(Error::Config(format!("train_stage1 called with stage {}", cfg.stage)));
    }
    if manifest.city_vocab.len() < 2 {
        return Err(Error::InvalidInput(
            "city classification needs at least two cities in the manifest".into(),
        ));
    }
    let mut init_rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, STREAM_INIT));
    let encoder = RefCnnEncoder::new(cfg.model.clone(), &mut init_rng)?;
    let classifier = LinearClassifier::new(
        cfg.model.embedding_dim,
        manifest.city_vocab.len(),
        &mut init_rng,
    );
    run_training(
        cfg,
        manifest,
        data,
        EncoderKind::Trainable(encoder),
        classifier,
        LabelKind::City,
        None,
        Role::CityModel,
    )
}

/// Stage 2: freeze the stage-1 encoder, train a fresh scene head on its
/// features. The returned checkpoint is a teacher.
pub fn train_stage2(
    city_ckpt: &Checkpoint,
    cfg: &StageConfig,
    manifest: &Manifest,
    data: &PreparedData,
) -> Result<RunOutput> {
    if cfg.stage != 2 {
        return Err(Error::Config(format!("train_stage2 called with stage {}", cfg.stage)));
    }
    if manifest.scene_vocab.len() < 2 {
        return Err(Error::InvalidInput(
            "scene classification needs at least two scenes in the manifest".into(),
        ));
    }
    let (enc_model, _) = city_ckpt.build_models()?;
    let mut init_rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, STREAM_INIT));
    let classifier = LinearClassifier::new(
        enc_model.embedding_dim(),
        manifest.scene_vocab.len(),
        &mut init_rng,
    );
    let encoder = EncoderKind::Frozen {
        model: enc_model,
        spec: city_ckpt.encoder_spec.clone(),
        params: city_ckpt.encoder_params.clone(),
    };
    let hash_before = encoder.hash();
    let out = run_training(
        cfg,
        manifest,
        data,
        encoder,
        classifier,
        LabelKind::Scene,
        None,
        Role::Teacher,
    )?;
    // Freeze invariant: the encoder parameters must be untouched.
    if out.checkpoint.encoder_hash != hash_before {
        return Err(Error::InvalidInput(
            "internal assertion failed: frozen encoder hash changed during stage 2".into(),
        ));
    }
    Ok(out)
}

/// Stage 3: knowledge distillation from the teacher ensemble into a
/// fresh scene student.
pub fn train_stage3(
    cfg: &StageConfig,
    teachers: &TeacherSet,
    manifest: &Manifest,
    data: &PreparedData,
) -> Result<RunOutput> {
    if cfg.stage != 3 {
        return Err(Error::Config(format!("train_stage3 called with stage {}", cfg.stage)));
    }
    if teachers.is_empty() {
        return Err(Error::NoTeachers);
    }
    if teachers.vocab != manifest.scene_vocab {
        return Err(Error::VocabMismatch(
            "teacher scene vocabulary does not match the manifest".into(),
        ));
    }
    let kd = cfg
        .kd
        .ok_or_else(|| Error::Config("stage 3 requires a kd section".into()))?;
    kd.validate()?;
    let mut init_rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, STREAM_INIT));
    let encoder = RefCnnEncoder::new(cfg.model.clone(), &mut init_rng)?;
    let classifier = LinearClassifier::new(
        cfg.model.embedding_dim,
        manifest.scene_vocab.len(),
        &mut init_rng,
    );
    run_training(
        cfg,
        manifest,
        data,
        EncoderKind::Trainable(encoder),
        classifier,
        LabelKind::Scene,
        Some((teachers, kd)),
        Role::Student,
    )
}

/// The no-teacher reference: the stage-3 loop with pure label loss.
pub fn train_baseline(cfg: &StageConfig, manifest: &Manifest, data: &PreparedData) -> Result<RunOutput> {
    if manifest.scene_vocab.len() < 2 {
        return Err(Error::InvalidInput(
            "scene classification needs at least two scenes in the manifest".into(),
        ));
    }
    let mut init_rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, STREAM_INIT));
    let encoder = RefCnnEncoder::new(cfg.model.clone(), &mut init_rng)?;
    let classifier = LinearClassifier::new(
        cfg.model.embedding_dim,
        manifest.scene_vocab.len(),
        &mut init_rng,
    );
    run_training(
        cfg,
        manifest,
        data,
        EncoderKind::Trainable(encoder),
        classifier,
        LabelKind::Scene,
        None,
        Role::Baseline,
    )
}

#[allow(clippy::too_many_arguments)]
fn run_training(
    cfg: &StageConfig,
    manifest: &Manifest,
    data: &PreparedData,
    mut encoder: EncoderKind,
    mut classifier: LinearClassifier,
    target_kind: LabelKind,
    distill: Option<(&TeacherSet, KdConfig)>,
    role: Role,
) -> Result<RunOutput> {
    if data.train_idx.is_empty() {
        return Err(Error::InvalidInput("train split is empty".into()));
    }
    let targets: &[usize] = match target_kind {
        LabelKind::Scene => &data.scene_targets,
        LabelKind::City => &data.city_targets,
    };
    let vocab = match target_kind {
        LabelKind::Scene => manifest.scene_vocab.clone(),
        LabelKind::City => manifest.city_vocab.clone(),
    };
    let k = vocab.len();
    if classifier.n_classes() != k {
        return Err(Error::Shape(format!(
            "classifier predicts {} classes, vocabulary has {k}",
            classifier.n_classes()
        )));
    }

    let decoupled = cfg.optimizer.name == OptimizerName::AdamW;
    let mut opt_encoder = match &mut encoder {
        EncoderKind::Trainable(e) => Some(Adam::new(e, cfg.optimizer.weight_decay as f32, decoupled)),
        EncoderKind::Frozen { .. } => None,
    };
    let mut opt_classifier = Adam::new(&mut classifier, cfg.optimizer.weight_decay as f32, decoupled);

    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, STREAM_SHUFFLE));
    let mut augment_rng = ChaCha8Rng::seed_from_u64(derive_seed(
        derive_seed(cfg.seed, STREAM_AUGMENT),
        cfg.augment.seed,
    ));

    // Cached-clean-teacher mode: ensemble logits per record, computed
    // once on unaugmented features.
    let teacher_cache: Option<Vec<Vec<f64>>> = match distill {
        Some((teachers, kd)) if cfg.teacher_logit_cache && kd.lambda < 1.0 => {
            let mut cache = vec![Vec::new(); data.specs.len()];
            for chunk in data.train_idx.chunks(cfg.batch_size.max(1)) {
                let batch = gather_batch(&data.specs, chunk)?;
                let z = teacher_logits(teachers, &batch)?;
                for (row, &rec) in chunk.iter().enumerate() {
                    cache[rec] = z.row(row).to_vec();
                }
            }
            Some(cache)
        }
        _ => None,
    };

    let mut warnings = Vec::new();
    let mut mixup_warned = false;
    let mut log = Vec::with_capacity(cfg.max_epochs as usize);
    let mut order: Vec<usize> = data.train_idx.clone();

    for epoch in 0..cfg.max_epochs {
        let lr = cfg.scheduler.lr_at(epoch as f64, cfg.optimizer.peak_lr) as f32;
        order.copy_from_slice(&data.train_idx);
        order.shuffle(&mut shuffle_rng);

        let mut sum_label_loss = 0.0f64;
        let mut sum_kd_loss = 0.0f64;
        let mut n_batches = 0usize;
        let mut correct = 0usize;
        let mut seen = 0usize;

        for chunk in order.chunks(cfg.batch_size) {
            // Assemble the batch, optionally through waveform-domain
            // impulse-response augmentation.
            let mut batch = match (&data.waveforms, &data.ir_bank) {
                (Some(waves), Some(bank)) => {
                    let mut batch_waves: Vec<Vec<f32>> =
                        chunk.iter().map(|&i| waves[i].clone()).collect();
                    augment::dir_aug(
                        &mut batch_waves,
                        cfg.augment.diraug_prob_p,
                        bank,
                        &mut augment_rng,
                    )?;
                    let specs: Vec<Spectrogram> = batch_waves
                        .iter()
                        .enumerate()
                        .map(|(j, w)| {
                            features::mel_spectrogram(
                                w,
                                &cfg.preprocessing,
                                &data.specs[chunk[j]].clip_id,
                            )
                        })
                        .collect::<Result<Vec<_>>>()?;
                    let refs: Vec<&Spectrogram> = specs.iter().collect();
                    SpecBatch::from_spectrograms(&refs)?
                }
                _ => gather_batch(&data.specs, chunk)?,
            };
            let hard: Vec<usize> = chunk.iter().map(|&i| targets[i]).collect();
            let mut labels = SoftLabels::one_hot(&hard, k)?;

            // Augmentation stack: mixup -> Freq-MixStyle -> SpecAugment.
            let trace = if cfg.augment.mixup_alpha > 0.0 {
                let t = augment::mixup(&mut batch, &mut labels, cfg.augment.mixup_alpha, &mut augment_rng)?;
                if !t.applied && chunk.len() == 1 && !mixup_warned {
                    warnings.push("mixup skipped on a single-item batch".into());
                    mixup_warned = true;
                }
                t
            } else {
                augment::MixupTrace::default()
            };
            if cfg.augment.fms_prob_p > 0.0 && batch.batch >= 2 {
                augment::freq_mixstyle(&mut batch, cfg.augment.fms_alpha, cfg.augment.fms_prob_p, &mut augment_rng)?;
            }
            if cfg.augment.specaug_prob_p > 0.0 && cfg.augment.specaug_ratio_r > 0.0 {
                augment::spec_augment(
                    &mut batch,
                    cfg.augment.specaug_ratio_r,
                    cfg.augment.specaug_prob_p,
                    &mut augment_rng,
                )?;
            }

            // Teacher soft targets; skipped entirely at lambda = 1.
            let teacher_rows: Option<Vec<f64>> = match distill {
                Some((teachers, kd)) if kd.lambda < 1.0 => {
                    if let Some(cache) = &teacher_cache {
                        let mut rows = Vec::with_capacity(chunk.len() * k);
                        for (p, &rec) in chunk.iter().enumerate() {
                            let own = &cache[rec];
                            if trace.applied {
                                let partner_rec = chunk[trace.partners[p]];
                                let other = &cache[partner_rec];
                                let g = trace.gammas[p];
                                rows.extend(
                                    own.iter()
                                        .zip(other)
                                        .map(|(&a, &b)| g * a + (1.0 - g) * b),
                                );
                            } else {
                                rows.extend_from_slice(own);
                            }
                        }
                        Some(rows)
                    } else {
                        Some(teacher_logits(teachers, &batch)?.values)
                    }
                }
                _ => None,
            };

            // Forward.
            let b = batch.batch;
            let (emb, tape) = match &mut encoder {
                EncoderKind::Trainable(e) => {
                    let (emb, tape) = e.forward_train(&batch)?;
                    (emb, Some(tape))
                }
                EncoderKind::Frozen { model, .. } => (model.encode(&batch)?, None),
            };
            let logits = classifier.forward(&emb, b)?;
            let z: Vec<f64> = logits.iter().map(|&v| v as f64).collect();

            // Loss and logit gradients in f64.
            let (lambda, tau, direction) = match distill {
                Some((_, kd)) => (kd.lambda, kd.temperature, kd.kl_direction),
                None => (1.0, 1.0, losses::KlDirection::TeacherReference),
            };
            let mut dlogits = vec![0.0f32; z.len()];
            let mut label_loss = 0.0f64;
            let mut kd_loss_sum = 0.0f64;
            for row in 0..b {
                let zr = &z[row * k..(row + 1) * k];
                let target_row = labels.row(row);
                label_loss += losses::cross_entropy(zr, Target::Soft(target_row))?;
                let teacher_row = teacher_rows
                    .as_ref()
                    .map(|rows| &rows[row * k..(row + 1) * k]);
                if let Some(tr) = teacher_row {
                    kd_loss_sum += losses::kd_loss_directed(zr, tr, tau, direction)?;
                }
                let g = losses::combined_grad(zr, teacher_row, Target::Soft(target_row), lambda, tau, direction)?;
                for (j, &gv) in g.iter().enumerate() {
                    dlogits[row * k + j] = (gv / b as f64) as f32;
                }
                // Batch accuracy against the dominant soft label.
                let pred = argmax_f64(zr);
                let truth = argmax_f64(target_row);
                if pred == truth {
                    correct += 1;
                }
            }
            seen += b;
            sum_label_loss += label_loss / b as f64;
            sum_kd_loss += kd_loss_sum / b as f64;
            n_batches += 1;

            // Backward + step.
            match &mut encoder {
                EncoderKind::Trainable(e) => {
                    e.zero_grad();
                    classifier.zero_grad();
                    let demb = classifier.backward(&emb, b, &dlogits);
                    e.backward(tape.as_ref().expect("tape for trainable encoder"), &demb);
                    opt_encoder.as_mut().expect("encoder optimizer").step(e, lr);
                }
                EncoderKind::Frozen { .. } => {
                    classifier.zero_grad();
                    let _ = classifier.backward(&emb, b, &dlogits);
                }
            }
            opt_classifier.step(&mut classifier, lr);
        }

        let val_accuracy = if data.val_idx.is_empty() {
            None
        } else {
            Some(subset_accuracy(&encoder, &classifier, data, &data.val_idx, targets, cfg.batch_size)?)
        };
        let test_accuracy = if data.test_idx.is_empty() {
            0.0
        } else {
            subset_accuracy(&encoder, &classifier, data, &data.test_idx, targets, cfg.batch_size)?
        };
        log.push(EpochLog {
            epoch,
            lr: lr as f64,
            loss_scene: sum_label_loss / n_batches.max(1) as f64,
            loss_city2scene: sum_kd_loss / n_batches.max(1) as f64,
            train_accuracy: correct as f64 / seen.max(1) as f64,
            val_accuracy,
            test_accuracy,
        });
    }

    // Final clean-pass accuracies in inference mode.
    let train_accuracy =
        subset_accuracy(&encoder, &classifier, data, &data.train_idx, targets, cfg.batch_size)?;
    let val_accuracy = if data.val_idx.is_empty() {
        None
    } else {
        Some(subset_accuracy(&encoder, &classifier, data, &data.val_idx, targets, cfg.batch_size)?)
    };
    let test_accuracy = if data.test_idx.is_empty() {
        0.0
    } else {
        subset_accuracy(&encoder, &classifier, data, &data.test_idx, targets, cfg.batch_size)?
    };

    let mut metrics = BTreeMap::new();
    metrics.insert("train_accuracy".to_string(), train_accuracy);
    metrics.insert("test_accuracy".to_string(), test_accuracy);
    if let Some(v) = val_accuracy {
        metrics.insert("val_accuracy".to_string(), v);
    }
    if let Some(last) = log.last() {
        metrics.insert("final_loss_scene".to_string(), last.loss_scene);
        metrics.insert("final_loss_city2scene".to_string(), last.loss_city2scene);
    }
    if let Some((teachers, kd)) = distill {
        metrics.insert("lambda".to_string(), kd.lambda);
        metrics.insert("temperature".to_string(), kd.temperature);
        metrics.insert("n_teachers".to_string(), teachers.len() as f64);
    }

    let (enc_spec, enc_params) = encoder.export();
    let checkpoint = Checkpoint::from_parts(
        role,
        matches!(encoder, EncoderKind::Frozen { .. }),
        enc_spec,
        enc_params,
        k,
        classifier.export_params(),
        target_kind,
        vocab,
        cfg.snapshot(),
        metrics,
    );

    Ok(RunOutput {
        checkpoint,
        log,
        warnings,
        train_accuracy,
        val_accuracy,
        test_accuracy,
    })
}

fn gather_batch(specs: &[Spectrogram], indices: &[usize]) -> Result<SpecBatch> {
    let refs: Vec<&Spectrogram> = indices.iter().map(|&i| &specs[i]).collect();
    SpecBatch::from_spectrograms(&refs)
}

fn argmax_f64(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

fn argmax_f32(v: &[f32]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Inference-mode accuracy over a subset of records.
fn subset_accuracy(
    encoder: &EncoderKind,
    classifier: &LinearClassifier,
    data: &PreparedData,
    indices: &[usize],
    targets: &[usize],
    batch_size: usize,
) -> Result<f64> {
    if indices.is_empty() {
        return Err(Error::Eval("empty evaluation split".into()));
    }
    let k = classifier.n_classes();
    let mut correct = 0usize;
    for chunk in indices.chunks(batch_size.max(1)) {
        let batch = gather_batch(&data.specs, chunk)?;
        let emb = encoder.encode_eval(&batch)?;
        let logits = classifier.forward(&emb, batch.batch)?;
        for (row, &rec) in chunk.iter().enumerate() {
            if argmax_f32(&logits[row * k..(row + 1) * k]) == targets[rec] {
                correct += 1;
            }
        }
    }
    Ok(correct as f64 / indices.len() as f64)
}
