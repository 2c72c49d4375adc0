//! Acceptance suite: one test per criterion, each printing a PASS line
//! with its measurements. Training-based criteria share one synthetic
//! fixture, built once.
//!
//! Run with `cargo test -p city2scene --test acceptance -- --nocapture`.

use std::sync::OnceLock;
use std::time::{Duration, Instant};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use city2scene::augment::{self, AugmentConfig, SoftLabels};
use city2scene::dataset::{generate_synthetic, parse_manifest, Manifest, SyntheticConfig};
use city2scene::eval::{classwise_report, lambda_sweep, Metrics, SweepResult};
use city2scene::features::{SpecBatch, SpectrogramConfig};
use city2scene::losses::{
    combined_grad, combined_loss, cross_entropy, ensemble_logits, kd_loss, softmax, KdConfig,
    KlDirection, LogitKind, Logits, Target,
};
use city2scene::models::EncoderSpec;
use city2scene::pipeline::{
    lr_cosine_warm_restarts, lr_warmup_linear_down, prepare_data, train_baseline, train_stage1,
    train_stage2, train_stage3, OptimizerConfig, OptimizerName, PreparedData, RunOutput,
    SchedulerSpec, StageConfig, TeacherSet,
};
use city2scene::util::{fmt_diff1, fmt_pct1};

// ---------------------------------------------------------------------------
// Shared desk-scale fixture

const SEEDS: [u64; 3] = [1, 2, 3];
const N_SCENES: usize = 3;
const N_CITIES: usize = 3;

fn synth_config(cue: f64) -> SyntheticConfig {
    SyntheticConfig {
        n_scenes: N_SCENES,
        n_cities: N_CITIES,
        clips_per_pair: 16,
        sample_rate_hz: 16_000,
        duration_s: 1.0,
        city_cue_strength: cue,
        noise_db: -30.0,
        seed: 42,
    }
}

fn stage_config(stage: u8, seed: u64) -> StageConfig {
    let (epochs, lr, mixup) = match stage {
        1 => (15, 0.01, 0.3),
        2 => (30, 0.02, 0.0),
        _ => (20, 0.01, 0.3),
    };
    StageConfig {
        stage,
        seed,
        max_epochs: epochs,
        batch_size: 32,
        model: EncoderSpec {
            n_mels: 32,
            embedding_dim: 128,
            widths: [32, 64, 128],
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
        augment: AugmentConfig {
            mixup_alpha: mixup,
            ..Default::default()
        },
        optimizer: OptimizerConfig {
            name: OptimizerName::Adam,
            peak_lr: lr,
            weight_decay: 0.0,
        },
        scheduler: SchedulerSpec::cosine(lr, 10, 2),
        kd: if stage == 3 {
            Some(KdConfig {
                temperature: 2.0,
                lambda: 0.5,
                kl_direction: KlDirection::TeacherReference,
            })
        } else {
            None
        },
        teacher_checkpoints: vec![],
        city_checkpoint: None,
        val_fraction: None,
        teacher_logit_cache: false,
        feature_cache_dir: None,
    }
}

struct Fixture {
    _dir: tempfile::TempDir,
    manifest: Manifest,
    data: PreparedData,
    stage1: Vec<RunOutput>,
    stage2: Vec<RunOutput>,
    stage2_elapsed: Duration,
    build_elapsed: Duration,
}

fn fixture() -> &'static Fixture {
    static FIXTURE: OnceLock<Fixture> = OnceLock::new();
    FIXTURE.get_or_init(|| {
        let t0 = Instant::now();
        let dir = tempfile::tempdir().expect("tempdir");
        let manifest = generate_synthetic(&synth_config(0.9), dir.path()).expect("synth corpus");
        let manifest = manifest
            .stratified_split(0.25, 7)
            .expect("split")
            .manifest;
        let data = prepare_data(&stage_config(1, 1), &manifest).expect("features");

        let mut stage1 = Vec::new();
        let mut stage2 = Vec::new();
        let mut stage2_elapsed = Duration::ZERO;
        for &seed in &SEEDS {
            let s1 = train_stage1(&stage_config(1, seed), &manifest, &data).expect("stage1");
            let t2 = Instant::now();
            let s2 =
                train_stage2(&s1.checkpoint, &stage_config(2, seed), &manifest, &data).expect("stage2");
            stage2_elapsed += t2.elapsed();
            stage1.push(s1);
            stage2.push(s2);
        }
        Fixture {
            _dir: dir,
            manifest,
            data,
            stage1,
            stage2,
            stage2_elapsed,
            build_elapsed: t0.elapsed(),
        }
    })
}

fn uniform_logits<R: Rng>(rng: &mut R, k: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..k).map(|_| rng.gen_range(lo..hi)).collect()
}

// ---------------------------------------------------------------------------
// Criterion 1: loss oracle suite

// Direct high-precision evaluations along a different algebraic path
// than the implementation (no max subtraction, no log-sum-exp).
fn oracle_softmax(z: &[f64], tau: f64) -> Vec<f64> {
    let e: Vec<f64> = z.iter().map(|&v| (v / tau).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

fn oracle_cross_entropy(z: &[f64], target: &[f64]) -> f64 {
    let p = oracle_softmax(z, 1.0);
    -target.iter().zip(&p).map(|(&t, &pi)| if t == 0.0 { 0.0 } else { t * pi.ln() }).sum::<f64>()
}

fn oracle_kd(student: &[f64], teacher: &[f64], tau: f64) -> f64 {
    let p = oracle_softmax(student, tau);
    let q = oracle_softmax(teacher, tau);
    tau * tau * q.iter().zip(&p).map(|(&qi, &pi)| qi * (qi / pi).ln()).sum::<f64>()
}

fn oracle_ensemble(list: &[Vec<f64>]) -> Vec<f64> {
    let k = list[0].len();
    (0..k)
        .map(|j| list.iter().map(|z| z[j]).sum::<f64>() / list.len() as f64)
        .collect()
}

#[test]
fn criterion_01_loss_oracles() {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xC1);
    let mut max_err = 0.0f64;
    for i in 0..1000 {
        let k = rng.gen_range(2..=20);
        let s = uniform_logits(&mut rng, k, -50.0, 50.0);
        let t = uniform_logits(&mut rng, k, -50.0, 50.0);
        let tau = [1.0, 2.0, 4.0][i % 3];
        let target = rng.gen_range(0..k);

        let p = softmax(&s, tau).unwrap();
        for (a, b) in p.iter().zip(oracle_softmax(&s, tau)) {
            max_err = max_err.max((a - b).abs());
        }

        let ce = cross_entropy(&s, Target::Index(target)).unwrap();
        let mut one_hot = vec![0.0; k];
        one_hot[target] = 1.0;
        max_err = max_err.max((ce - oracle_cross_entropy(&s, &one_hot)).abs());

        let kd = kd_loss(&s, &t, tau).unwrap();
        max_err = max_err.max((kd - oracle_kd(&s, &t, tau)).abs());

        let lambda = rng.gen_range(0.0..=1.0);
        let combined = combined_loss(ce, kd, lambda).unwrap();
        max_err = max_err.max((combined - (lambda * ce + (1.0 - lambda) * kd)).abs());

        let n_teachers = rng.gen_range(1..=4);
        let teacher_rows: Vec<Vec<f64>> = (0..n_teachers)
            .map(|_| uniform_logits(&mut rng, k, -50.0, 50.0))
            .collect();
        let logits: Vec<Logits> = teacher_rows
            .iter()
            .map(|r| Logits::new(r.clone(), k, LogitKind::CityToScene).unwrap())
            .collect();
        let ens = ensemble_logits(&logits).unwrap();
        for (a, b) in ens.values.iter().zip(oracle_ensemble(&teacher_rows)) {
            max_err = max_err.max((a - b).abs());
        }
    }
    assert!(max_err < 1e-9, "loss oracle max abs error {max_err}");

    // Anchored values.
    let uniform = vec![0.0; 10];
    let ce10 = cross_entropy(&uniform, Target::Index(3)).unwrap();
    assert!((ce10 - 10f64.ln()).abs() < 1e-12, "CE(uniform, 10) = {ce10}");
    let kd_anchor = kd_loss(&[0.0, 0.0], &[2.0, 0.0], 2.0).unwrap();
    assert!((kd_anchor - oracle_kd(&[0.0, 0.0], &[2.0, 0.0], 2.0)).abs() < 1e-12);
    assert!((kd_anchor - 0.44381).abs() < 1e-4, "kd anchor {kd_anchor}");

    let elapsed = t0.elapsed();
    assert!(elapsed < Duration::from_secs(10), "criterion 1 took {elapsed:?}");
    eprintln!("criterion 1 (loss oracle suite): PASS  max_abs_err={max_err:.3e} elapsed={elapsed:?}");
}

// ---------------------------------------------------------------------------
// Criterion 2: gradient check

#[test]
fn criterion_02_gradient_check() {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xC2);
    let h = 1e-5;
    let mut max_rel = 0.0f64;
    for _ in 0..100 {
        let k = 10;
        let s = uniform_logits(&mut rng, k, -4.0, 4.0);
        let t = uniform_logits(&mut rng, k, -4.0, 4.0);
        let target = rng.gen_range(0..k);
        for &lambda in &[0.0, 0.3, 0.5, 1.0] {
            for &tau in &[1.0, 2.0, 4.0] {
                let grad = combined_grad(
                    &s,
                    Some(&t),
                    Target::Index(target),
                    lambda,
                    tau,
                    KlDirection::TeacherReference,
                )
                .unwrap();
                let loss_of = |z: &[f64]| {
                    let ce = cross_entropy(z, Target::Index(target)).unwrap();
                    let kd = kd_loss(z, &t, tau).unwrap();
                    combined_loss(ce, kd, lambda).unwrap()
                };
                for j in 0..k {
                    let mut zp = s.clone();
                    let mut zm = s.clone();
                    zp[j] += h;
                    zm[j] -= h;
                    let numeric = (loss_of(&zp) - loss_of(&zm)) / (2.0 * h);
                    let denom = numeric.abs().max(grad[j].abs()).max(1e-8);
                    let rel = (numeric - grad[j]).abs() / denom;
                    max_rel = max_rel.max(rel);
                    assert!(
                        rel < 1e-4,
                        "gradient mismatch: lambda={lambda} tau={tau} j={j} analytic={} numeric={numeric}",
                        grad[j]
                    );
                }
            }
        }
    }
    let elapsed = t0.elapsed();
    assert!(elapsed < Duration::from_secs(30), "criterion 2 took {elapsed:?}");
    eprintln!("criterion 2 (gradient check): PASS  max_rel_err={max_rel:.3e} elapsed={elapsed:?}");
}

// ---------------------------------------------------------------------------
// Criterion 3: lambda = 1 endpoint equals the baseline bit-exactly

#[test]
fn criterion_03_lambda_one_equals_baseline() {
    let fx = fixture();
    let t0 = Instant::now();
    let teachers =
        TeacherSet::from_checkpoints(std::slice::from_ref(&fx.stage2[0].checkpoint)).unwrap();

    let mut cfg = stage_config(3, 11);
    cfg.max_epochs = 3;
    cfg.kd = Some(KdConfig {
        temperature: 2.0,
        lambda: 1.0,
        kl_direction: KlDirection::TeacherReference,
    });
    let student = train_stage3(&cfg, &teachers, &fx.manifest, &fx.data).unwrap();

    let mut base_cfg = stage_config(3, 11);
    base_cfg.max_epochs = 3;
    let baseline = train_baseline(&base_cfg, &fx.manifest, &fx.data).unwrap();

    assert_eq!(
        student.checkpoint.encoder_hash, baseline.checkpoint.encoder_hash,
        "encoder parameters diverged"
    );
    assert_eq!(
        student.checkpoint.classifier_hash, baseline.checkpoint.classifier_hash,
        "classifier parameters diverged"
    );
    let elapsed = t0.elapsed();
    assert!(elapsed < Duration::from_secs(120), "criterion 3 took {elapsed:?}");
    eprintln!(
        "criterion 3 (lambda=1 endpoint): PASS  encoder_hash={:016x} elapsed={elapsed:?}",
        student.checkpoint.encoder_hash
    );
}

// ---------------------------------------------------------------------------
// Criterion 4: freeze invariant across a full stage-2 training

#[test]
fn criterion_04_freeze_invariant() {
    let fx = fixture();
    for (i, (s1, s2)) in fx.stage1.iter().zip(&fx.stage2).enumerate() {
        assert_eq!(
            s1.checkpoint.encoder_hash, s2.checkpoint.encoder_hash,
            "seed {}: encoder hash changed during stage 2",
            SEEDS[i]
        );
        assert!(s2.checkpoint.frozen_encoder);
    }
    assert!(
        fx.stage2_elapsed < Duration::from_secs(180),
        "stage-2 trainings took {:?}",
        fx.stage2_elapsed
    );
    eprintln!(
        "criterion 4 (freeze invariant): PASS  3 seeds x 30 epochs, stage2_elapsed={:?}",
        fx.stage2_elapsed
    );
}

// ---------------------------------------------------------------------------
// Criterion 5: ensemble of identical teachers degenerates exactly

#[test]
fn criterion_05_ensemble_degeneracy() {
    let fx = fixture();
    let t0 = Instant::now();
    let t = &fx.stage2[0].checkpoint;
    let single = TeacherSet::from_checkpoints(std::slice::from_ref(t)).unwrap();
    let trio = TeacherSet::from_checkpoints(&[t.clone(), t.clone(), t.clone()]).unwrap();

    let mut cfg = stage_config(3, 13);
    cfg.max_epochs = 4;
    let a = train_stage3(&cfg, &single, &fx.manifest, &fx.data).unwrap();
    let b = train_stage3(&cfg, &trio, &fx.manifest, &fx.data).unwrap();
    assert_eq!(a.checkpoint.encoder_hash, b.checkpoint.encoder_hash);
    assert_eq!(a.checkpoint.classifier_hash, b.checkpoint.classifier_hash);
    eprintln!(
        "criterion 5 (ensemble degeneracy): PASS  encoder_hash={:016x} elapsed={:?}",
        a.checkpoint.encoder_hash,
        t0.elapsed()
    );
}

// ---------------------------------------------------------------------------
// Criterion 6: scheduler oracle

#[test]
fn criterion_06_scheduler_oracle() {
    // Independent direct evaluation: enumerate cycle boundaries, apply
    // the closed form.
    let direct = |epoch: f64| -> f64 {
        let (peak, min, t0, t_mult) = (0.04, 0.0, 10u32, 2u32);
        let mut start = 0.0;
        let mut len = t0 as f64;
        while epoch >= start + len {
            start += len;
            len *= t_mult as f64;
        }
        min + (peak - min) * (1.0 + (std::f64::consts::PI * (epoch - start) / len).cos()) / 2.0
    };
    let expect = [
        (0.0, 0.04),
        (5.0, 0.02),
        (10.0, 0.04),
        (20.0, 0.02),
        (30.0, 0.04),
    ];
    for &(epoch, want) in &expect {
        let got = lr_cosine_warm_restarts(epoch, 0.04, 0.0, 10, 2);
        assert!((got - direct(epoch)).abs() < 1e-12, "epoch {epoch}: {got} vs oracle");
        assert!((got - want).abs() < 1e-12, "epoch {epoch}: {got} vs {want}");
    }
    for &(epoch, want) in &[(0.0, 0.0), (3.0, 1e-5), (8.0, 5e-6)] {
        let got = lr_warmup_linear_down(epoch, 1e-5, 0.0, 3, 10);
        assert!((got - want).abs() < 1e-12, "epoch {epoch}: {got} vs {want}");
    }
    eprintln!("criterion 6 (scheduler oracle): PASS");
}

// ---------------------------------------------------------------------------
// Criterion 7: synthetic three-stage reproduction

#[test]
fn criterion_07_synthetic_city2scene_reproduction() {
    let fx = fixture();
    let t0 = Instant::now();
    let chance_city = 1.0 / N_CITIES as f64;
    let chance_scene = 1.0 / N_SCENES as f64;

    // (a) city accuracy well above chance at cue 0.9
    let city_accs: Vec<f64> = fx.stage1.iter().map(|r| r.test_accuracy).collect();
    let city_mean = city_accs.iter().sum::<f64>() / city_accs.len() as f64;
    assert!(
        city_mean > chance_city + 0.25,
        "7a failed: city accuracy {city_mean:.3} not > chance + 25 pts"
    );
    eprintln!(
        "criterion 7a (stage-1 city accuracy): PASS  mean={} vs chance={}",
        fmt_pct1(city_mean),
        fmt_pct1(chance_city)
    );

    // (b) scenes from frozen city features
    let probe_accs: Vec<f64> = fx.stage2.iter().map(|r| r.test_accuracy).collect();
    let probe_mean = probe_accs.iter().sum::<f64>() / probe_accs.len() as f64;
    assert!(
        probe_mean > chance_scene + 0.20,
        "7b failed: frozen-feature scene accuracy {probe_mean:.3} not > chance + 20 pts"
    );
    eprintln!(
        "criterion 7b (stage-2 scene-from-city): PASS  mean={} vs chance={}",
        fmt_pct1(probe_mean),
        fmt_pct1(chance_scene)
    );

    // (c) distilled student vs baseline at the best swept lambda
    let mut baseline_accs = Vec::new();
    for &seed in &SEEDS {
        let out = train_baseline(&stage_config(3, seed), &fx.manifest, &fx.data).unwrap();
        baseline_accs.push(out.test_accuracy);
    }
    let baseline_mean = baseline_accs.iter().sum::<f64>() / baseline_accs.len() as f64;
    let teachers =
        TeacherSet::from_checkpoints(std::slice::from_ref(&fx.stage2[0].checkpoint)).unwrap();
    let sweep: SweepResult = lambda_sweep(
        &stage_config(3, 1),
        &teachers,
        &fx.manifest,
        &fx.data,
        &[0.3, 0.5, 0.7, 0.9],
        &SEEDS,
    )
    .unwrap();
    let (best_lambda, best_mean) = sweep.best_lambda().expect("sweep aggregate");
    assert!(
        best_mean >= baseline_mean,
        "7c failed: best student mean {best_mean:.3} (lambda={best_lambda}) < baseline {baseline_mean:.3}"
    );
    eprintln!(
        "criterion 7c (student vs baseline): PASS  student={} @ lambda={best_lambda} vs baseline={}",
        fmt_pct1(best_mean),
        fmt_pct1(baseline_mean)
    );

    // (d) negative control at cue strength 0: the stage-2 probe stays
    // within 10 points of chance (and city accuracy collapses too).
    let dir = tempfile::tempdir().unwrap();
    let manifest0 = generate_synthetic(&synth_config(0.0), dir.path()).unwrap();
    let manifest0 = manifest0.stratified_split(0.25, 7).unwrap().manifest;
    let data0 = prepare_data(&stage_config(1, 1), &manifest0).unwrap();
    let mut city0 = Vec::new();
    let mut probe0 = Vec::new();
    for &seed in &SEEDS {
        let s1 = train_stage1(&stage_config(1, seed), &manifest0, &data0).unwrap();
        let s2 = train_stage2(&s1.checkpoint, &stage_config(2, seed), &manifest0, &data0).unwrap();
        city0.push(s1.test_accuracy);
        probe0.push(s2.test_accuracy);
    }
    let city0_mean = city0.iter().sum::<f64>() / city0.len() as f64;
    let probe0_mean = probe0.iter().sum::<f64>() / probe0.len() as f64;
    assert!(
        (city0_mean - chance_city).abs() <= 0.10,
        "7d failed: cue-0 city accuracy {city0_mean:.3} not within 10 pts of chance"
    );
    assert!(
        (probe0_mean - chance_scene).abs() <= 0.10,
        "7d failed: cue-0 probe accuracy {probe0_mean:.3} not within 10 pts of chance"
    );
    eprintln!(
        "criterion 7d (cue-0 negative control): PASS  city={} probe={} chance={}",
        fmt_pct1(city0_mean),
        fmt_pct1(probe0_mean),
        fmt_pct1(chance_scene)
    );

    let total = fx.build_elapsed + t0.elapsed();
    assert!(
        total < Duration::from_secs(900),
        "criterion 7 total runtime {total:?} exceeds 15 min"
    );
    eprintln!("criterion 7 (synthetic reproduction): PASS  total_runtime={total:?}");
}

// ---------------------------------------------------------------------------
// Criterion 8: augmentation identity suite

#[test]
fn criterion_08_augmentation_identities() {
    let mut state = 0xA8u64;
    let data: Vec<f32> = (0..6 * 16 * 12)
        .map(|_| {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            (state >> 33) as f32 / (1u64 << 31) as f32 * 6.0 - 3.0
        })
        .collect();
    let orig = SpecBatch {
        data,
        batch: 6,
        n_mels: 16,
        n_frames: 12,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(0xA8);

    // p = 0 / alpha = 0 transforms are bit-exact identities.
    let mut b = orig.clone();
    let mut labels = SoftLabels::one_hot(&[0, 1, 2, 0, 1, 2], 3).unwrap();
    let labels_orig = labels.clone();
    augment::mixup(&mut b, &mut labels, 0.0, &mut rng).unwrap();
    assert_eq!(b, orig);
    assert_eq!(labels, labels_orig);
    let mut b = orig.clone();
    augment::spec_augment(&mut b, 0.3, 0.0, &mut rng).unwrap();
    assert_eq!(b, orig);
    let mut b = orig.clone();
    augment::freq_mixstyle(&mut b, 0.4, 0.0, &mut rng).unwrap();
    assert_eq!(b, orig);
    let mut waves = vec![vec![0.5f32, -0.25, 0.125, 0.0]];
    let waves_orig = waves.clone();
    augment::dir_aug(&mut waves, 0.0, &augment::IrBank::default(), &mut rng).unwrap();
    assert_eq!(waves, waves_orig);

    // Mixup keeps soft labels normalized.
    let mut worst = 0.0f64;
    for round in 0..50 {
        let mut b = orig.clone();
        let mut labels = SoftLabels::one_hot(&[0, 1, 2, 0, 1, 2], 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(round);
        augment::mixup(&mut b, &mut labels, 0.3, &mut rng).unwrap();
        labels.validate().unwrap();
        for i in 0..labels.batch_len() {
            let sum: f64 = labels.row(i).iter().sum();
            worst = worst.max((sum - 1.0).abs());
        }
    }
    assert!(worst < 1e-6, "mixup label sums drifted by {worst}");

    // Delta impulse response: identity up to peak renormalization.
    let wave: Vec<f32> = (0..256).map(|i| ((i as f32) * 0.13).sin() * 0.7).collect();
    for delta in [vec![1.0f32], vec![0.5f32]] {
        let out = augment::convolve_renormalized(&wave, &delta);
        for (a, e) in out.iter().zip(&wave) {
            assert!((a - e).abs() < 1e-6);
        }
    }
    eprintln!("criterion 8 (augmentation identities): PASS  worst_label_sum_err={worst:.2e}");
}

// ---------------------------------------------------------------------------
// Criterion 9: manifest parse and round-trip on a 20-row fixture

#[test]
fn criterion_09_manifest_fixture_round_trip() {
    let scenes = [
        "airport",
        "bus",
        "metro",
        "metro_station",
        "park",
        "public_square",
        "shopping_mall",
        "street_pedestrian",
        "street_traffic",
        "tram",
    ];
    let cities = ["barcelona", "helsinki"];
    let dir = tempfile::tempdir().unwrap();
    let mut meta = String::from("filename\tscene_label\tidentifier\tsource_label\n");
    for (i, scene) in scenes.iter().enumerate() {
        for (j, city) in cities.iter().enumerate() {
            meta.push_str(&format!(
                "{scene}-{city}-{i}-{j}-a.wav\t{scene}\t{city}-{i}\ta\n"
            ));
        }
    }
    let meta_path = dir.path().join("meta.tsv");
    std::fs::write(&meta_path, &meta).unwrap();

    let manifest = parse_manifest(&meta_path, None).expect("fixture parses with zero errors");
    assert_eq!(manifest.records.len(), 20);
    assert_eq!(manifest.scene_vocab.len(), 10);
    assert_eq!(manifest.city_vocab, vec!["barcelona", "helsinki"]);
    for scene in &scenes {
        assert!(manifest.scene_vocab.iter().any(|s| s == scene));
    }

    let out_meta = dir.path().join("meta_out.tsv");
    manifest.write(&out_meta, None).unwrap();
    let reparsed = parse_manifest(&out_meta, None).unwrap();
    assert_eq!(reparsed, manifest);
    eprintln!("criterion 9 (manifest fixture round-trip): PASS  20 rows, 10 scenes");
}

// ---------------------------------------------------------------------------
// Criterion 10: class-wise report reproduces the published diff column

#[test]
fn criterion_10_classwise_report_fidelity() {
    let baseline_rows = [
        ("airport", 45.1),
        ("bus", 91.7),
        ("metro", 71.8),
        ("metro_station", 62.6),
        ("park", 84.7),
        ("public_square", 58.5),
        ("shopping_mall", 78.6),
        ("street_pedestrian", 50.9),
        ("street_traffic", 83.8),
        ("tram", 72.8),
    ];
    let treated_rows = [
        ("airport", 58.8),
        ("bus", 89.9),
        ("metro", 76.2),
        ("metro_station", 75.4),
        ("park", 81.0),
        ("public_square", 63.7),
        ("shopping_mall", 65.9),
        ("street_pedestrian", 53.6),
        ("street_traffic", 81.2),
        ("tram", 77.3),
    ];
    let build = |rows: &[(&str, f64)], overall: f64| -> Metrics {
        let per_class: std::collections::BTreeMap<String, f64> = rows
            .iter()
            .map(|&(c, p)| (c.to_string(), p / 100.0))
            .collect();
        let class_mean = per_class.values().sum::<f64>() / per_class.len() as f64;
        Metrics {
            overall: overall / 100.0,
            class_mean,
            per_class,
            per_city: Default::default(),
            confusion: Vec::new(),
            n_eval: 0,
        }
    };
    let baseline = build(&baseline_rows, 70.1);
    let treated = build(&treated_rows, 72.2);
    let report = classwise_report(&baseline, &treated).unwrap();

    let diff_of = |class: &str| {
        fmt_diff1(
            report
                .rows
                .iter()
                .find(|r| r.class == class)
                .unwrap()
                .diff_pct,
        )
    };
    assert_eq!(diff_of("airport"), "+13.7");
    assert_eq!(diff_of("shopping_mall"), "-12.7");
    assert_eq!(fmt_diff1(report.average.diff_pct), "+2.1");
    // Full diff column while we are at it.
    let expected = [
        ("airport", "+13.7"),
        ("bus", "-1.8"),
        ("metro", "+4.4"),
        ("metro_station", "+12.8"),
        ("park", "-3.7"),
        ("public_square", "+5.2"),
        ("shopping_mall", "-12.7"),
        ("street_pedestrian", "+2.7"),
        ("street_traffic", "-2.6"),
        ("tram", "+4.5"),
    ];
    for (class, want) in expected {
        assert_eq!(diff_of(class), want, "diff for {class}");
    }
    // The class mean of the printed baseline column rounds to its
    // published average.
    assert_eq!(fmt_pct1(baseline.class_mean), "70.1");
    eprintln!("criterion 10 (class-wise report fidelity): PASS  Average diff +2.1");
}
