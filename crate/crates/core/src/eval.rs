//! Evaluation and reporting: accuracy metrics, class-wise comparison
//! tables, lambda sweeps, and embedding exports.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::{Manifest, Split};
use crate::error::{Error, Result};
use crate::features::{self, Spectrogram};
use crate::losses::KdConfig;
use crate::models::{Checkpoint, LabelKind};
use crate::pipeline::train::{self, PreparedData, TeacherSet};
use crate::pipeline::StageConfig;
use crate::util::{fmt_diff1, fmt_pct1, round1};

const EVAL_BATCH: usize = 32;

/// Evaluation outputs for one checkpoint on one split.
///
/// `overall` is micro (clip-level) accuracy; `class_mean` is the
/// unweighted mean of the per-class accuracies. Both are emitted since
/// published tables use either convention.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Metrics {
    pub overall: f64,
    pub class_mean: f64,
    pub per_class: BTreeMap<String, f64>,
    pub per_city: BTreeMap<String, f64>,
    pub confusion: Vec<Vec<u64>>,
    pub n_eval: usize,
}

impl Metrics {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("metrics serialize")
    }
}

/// Deterministic inference-mode evaluation of a checkpoint on a
/// manifest split. Features are extracted with the preprocessing config
/// recorded in the checkpoint snapshot.
pub fn evaluate(ckpt: &Checkpoint, manifest: &Manifest, split: Split) -> Result<Metrics> {
    let preprocessing = preprocessing_from_snapshot(ckpt)?;
    let indices = manifest.indices_in(split);
    let mut specs: Vec<Option<Spectrogram>> = (0..manifest.records.len()).map(|_| None).collect();
    for &i in &indices {
        let rec = &manifest.records[i];
        specs[i] = Some(features::extract_one(&rec.path, &rec.clip_id, &preprocessing)?);
    }
    evaluate_indices(ckpt, manifest, &indices, |i| {
        specs[i].as_ref().expect("feature present for split index")
    })
}

/// As [`evaluate`], reusing already-extracted features.
pub fn evaluate_with_features(
    ckpt: &Checkpoint,
    manifest: &Manifest,
    specs: &[Spectrogram],
    split: Split,
) -> Result<Metrics> {
    let indices = manifest.indices_in(split);
    evaluate_indices(ckpt, manifest, &indices, |i| &specs[i])
}

fn preprocessing_from_snapshot(ckpt: &Checkpoint) -> Result<features::SpectrogramConfig> {
    let value = ckpt
        .config_snapshot
        .get("preprocessing")
        .cloned()
        .ok_or_else(|| Error::Eval("checkpoint snapshot lacks a preprocessing section".into()))?;
    serde_json::from_value(value)
        .map_err(|e| Error::Eval(format!("bad preprocessing snapshot: {e}")))
}

fn evaluate_indices<'a, F>(
    ckpt: &Checkpoint,
    manifest: &Manifest,
    indices: &[usize],
    spec_of: F,
) -> Result<Metrics>
where
    F: Fn(usize) -> &'a Spectrogram,
{
    if indices.is_empty() {
        return Err(Error::Eval("evaluation split is empty".into()));
    }
    let vocab = match ckpt.target_kind {
        LabelKind::Scene => &manifest.scene_vocab,
        LabelKind::City => &manifest.city_vocab,
    };
    if &ckpt.target_vocab != vocab {
        return Err(Error::VocabMismatch(format!(
            "checkpoint vocabulary {:?} does not match manifest {:?}",
            ckpt.target_vocab, vocab
        )));
    }
    let k = vocab.len();
    let (encoder, classifier) = ckpt.build_models()?;

    let mut confusion = vec![vec![0u64; k]; k];
    let mut city_total: BTreeMap<String, (u64, u64)> = BTreeMap::new();
    for chunk in indices.chunks(EVAL_BATCH) {
        let refs: Vec<&Spectrogram> = chunk.iter().map(|&i| spec_of(i)).collect();
        let batch = features::SpecBatch::from_spectrograms(&refs)?;
        let emb = encoder.encode(&batch)?;
        let logits = classifier.classify(&emb, batch.batch)?;
        for (row, &i) in chunk.iter().enumerate() {
            let rec = &manifest.records[i];
            let truth = match ckpt.target_kind {
                LabelKind::Scene => manifest.scene_index(&rec.scene_label)?,
                LabelKind::City => manifest.city_index(&rec.city_label)?,
            };
            let row_logits = &logits[row * k..(row + 1) * k];
            let mut pred = 0;
            for (j, &v) in row_logits.iter().enumerate() {
                if v > row_logits[pred] {
                    pred = j;
                }
            }
            confusion[truth][pred] += 1;
            let e = city_total.entry(rec.city_label.clone()).or_insert((0, 0));
            e.1 += 1;
            if pred == truth {
                e.0 += 1;
            }
        }
    }

    let n_eval: u64 = confusion.iter().map(|r| r.iter().sum::<u64>()).sum();
    let trace: u64 = (0..k).map(|c| confusion[c][c]).sum();
    let mut per_class = BTreeMap::new();
    for (c, label) in vocab.iter().enumerate() {
        let row_sum: u64 = confusion[c].iter().sum();
        if row_sum > 0 {
            per_class.insert(label.clone(), confusion[c][c] as f64 / row_sum as f64);
        }
    }
    let class_mean = if per_class.is_empty() {
        0.0
    } else {
        per_class.values().sum::<f64>() / per_class.len() as f64
    };
    let per_city = city_total
        .into_iter()
        .map(|(city, (ok, total))| (city, ok as f64 / total as f64))
        .collect();
    Ok(Metrics {
        overall: trace as f64 / n_eval as f64,
        class_mean,
        per_class,
        per_city,
        confusion,
        n_eval: n_eval as usize,
    })
}

// ---------------------------------------------------------------------------
// Class-wise comparison table

#[derive(Debug, Clone, PartialEq)]
pub struct ClasswiseRow {
    pub class: String,
    pub baseline_pct: f64,
    pub treated_pct: f64,
    pub diff_pct: f64,
}

/// One row per class plus an `Average` row; percentages are rounded to
/// one decimal when rendered. The `Average` row compares the overall
/// accuracies of the two metric sets (the convention used by published
/// class-wise tables); the unweighted class means are also reported.
#[derive(Debug, Clone)]
pub struct ClasswiseReport {
    pub rows: Vec<ClasswiseRow>,
    pub average: ClasswiseRow,
    pub class_mean: ClasswiseRow,
}

pub fn classwise_report(baseline: &Metrics, treated: &Metrics) -> Result<ClasswiseReport> {
    let base_classes: Vec<&String> = baseline.per_class.keys().collect();
    let treat_classes: Vec<&String> = treated.per_class.keys().collect();
    if base_classes != treat_classes {
        return Err(Error::VocabMismatch(
            "class-wise report needs matching scene vocabularies".into(),
        ));
    }
    let rows = baseline
        .per_class
        .iter()
        .map(|(class, &b)| {
            let t = treated.per_class[class];
            ClasswiseRow {
                class: class.clone(),
                baseline_pct: b * 100.0,
                treated_pct: t * 100.0,
                diff_pct: (t - b) * 100.0,
            }
        })
        .collect();
    let average = ClasswiseRow {
        class: "Average".into(),
        baseline_pct: baseline.overall * 100.0,
        treated_pct: treated.overall * 100.0,
        diff_pct: (treated.overall - baseline.overall) * 100.0,
    };
    let class_mean = ClasswiseRow {
        class: "Class mean".into(),
        baseline_pct: baseline.class_mean * 100.0,
        treated_pct: treated.class_mean * 100.0,
        diff_pct: (treated.class_mean - baseline.class_mean) * 100.0,
    };
    Ok(ClasswiseReport {
        rows,
        average,
        class_mean,
    })
}

impl ClasswiseReport {
    pub fn render_text(&self) -> String {
        let width = self
            .rows
            .iter()
            .map(|r| r.class.len())
            .chain([10])
            .max()
            .unwrap_or(10);
        let mut out = String::new();
        writeln!(out, "{:<width$}  {:>8}  {:>10}  {:>6}", "Class", "Baseline", "City2Scene", "Diff").unwrap();
        for r in &self.rows {
            writeln!(
                out,
                "{:<width$}  {:>8}  {:>10}  {:>6}",
                r.class,
                fmt_pct1(r.baseline_pct / 100.0),
                fmt_pct1(r.treated_pct / 100.0),
                fmt_diff1(r.diff_pct),
            )
            .unwrap();
        }
        for r in [&self.average, &self.class_mean] {
            writeln!(
                out,
                "{:<width$}  {:>8}  {:>10}  {:>6}",
                r.class,
                fmt_pct1(r.baseline_pct / 100.0),
                fmt_pct1(r.treated_pct / 100.0),
                fmt_diff1(r.diff_pct),
            )
            .unwrap();
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("class,baseline,treated,diff\n");
        for r in self.rows.iter().chain([&self.average, &self.class_mean]) {
            writeln!(
                out,
                "{},{},{},{}",
                r.class,
                fmt_pct1(r.baseline_pct / 100.0),
                fmt_pct1(r.treated_pct / 100.0),
                fmt_diff1(r.diff_pct),
            )
            .unwrap();
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Lambda sweep

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub lambda: f64,
    pub seed: u64,
    /// NaN when the run failed; the error is kept alongside.
    pub accuracy: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Default)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    /// Per lambda: (mean, sample standard deviation) over seeds.
    pub aggregate: Vec<(f64, f64, f64)>,
}

impl SweepResult {
    pub fn from_rows(rows: Vec<SweepRow>) -> Self {
        let mut by_lambda: BTreeMap<u64, (f64, Vec<f64>)> = BTreeMap::new();
        for r in &rows {
            if r.accuracy.is_nan() {
                continue;
            }
            by_lambda
                .entry(r.lambda.to_bits())
                .or_insert((r.lambda, Vec::new()))
                .1
                .push(r.accuracy);
        }
        let mut aggregate: Vec<(f64, f64, f64)> = by_lambda
            .into_values()
            .map(|(lambda, accs)| {
                let mean = accs.iter().sum::<f64>() / accs.len() as f64;
                let std = if accs.len() > 1 {
                    (accs.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>()
                        / (accs.len() - 1) as f64)
                        .sqrt()
                } else {
                    0.0
                };
                (lambda, mean, std)
            })
            .collect();
        aggregate.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        Self { rows, aggregate }
    }

    /// The lambda with the best mean accuracy.
    pub fn best_lambda(&self) -> Option<(f64, f64)> {
        self.aggregate
            .iter()
            .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .map(|&(l, m, _)| (l, m))
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("lambda,seed,accuracy\n");
        for r in &self.rows {
            writeln!(out, "{},{},{}", r.lambda, r.seed, r.accuracy).unwrap();
        }
        out
    }

    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if i == 0 {
                if line.trim() != "lambda,seed,accuracy" {
                    return Err(Error::InvalidInput(format!("bad sweep header '{line}'")));
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 3 {
                return Err(Error::InvalidInput(format!("bad sweep row '{line}'")));
            }
            rows.push(SweepRow {
                lambda: cols[0]
                    .parse()
                    .map_err(|e| Error::InvalidInput(format!("bad lambda: {e}")))?,
                seed: cols[1]
                    .parse()
                    .map_err(|e| Error::InvalidInput(format!("bad seed: {e}")))?,
                accuracy: cols[2]
                    .parse()
                    .map_err(|e| Error::InvalidInput(format!("bad accuracy: {e}")))?,
                error: None,
            });
        }
        Ok(Self::from_rows(rows))
    }
}

/// Train one stage-3 student per (lambda, seed) and collect test
/// accuracies. A failed run is recorded in its row and the sweep
/// continues.
pub fn lambda_sweep(
    base_cfg: &StageConfig,
    teachers: &TeacherSet,
    manifest: &Manifest,
    data: &PreparedData,
    lambdas: &[f64],
    seeds: &[u64],
) -> Result<SweepResult> {
    if lambdas.is_empty() || seeds.is_empty() {
        return Err(Error::Config("lambda sweep needs lambdas and seeds".into()));
    }
    if lambdas.iter().any(|l| !(0.0..=1.0).contains(l)) {
        return Err(Error::Config("sweep lambdas must lie in [0, 1]".into()));
    }
    let mut rows = Vec::with_capacity(lambdas.len() * seeds.len());
    for &lambda in lambdas {
        for &seed in seeds {
            let mut cfg = base_cfg.clone();
            cfg.stage = 3;
            cfg.seed = seed;
            cfg.kd = Some(KdConfig {
                lambda,
                ..cfg.kd.unwrap_or_default()
            });
            let row = match train::train_stage3(&cfg, teachers, manifest, data) {
                Ok(out) => SweepRow {
                    lambda,
                    seed,
                    accuracy: out.test_accuracy,
                    error: None,
                },
                Err(e) => SweepRow {
                    lambda,
                    seed,
                    accuracy: f64::NAN,
                    error: Some(e.to_string()),
                },
            };
            rows.push(row);
        }
    }
    Ok(SweepResult::from_rows(rows))
}

/// Minimal line plot of mean accuracy against lambda.
pub fn write_sweep_svg(sweep: &SweepResult, label: &str, path: &Path) -> Result<()> {
    let (w, h, ml, mb) = (640.0f64, 420.0f64, 70.0f64, 50.0f64);
    let plot_w = w - ml - 30.0;
    let plot_h = h - mb - 30.0;
    let pts = &sweep.aggregate;
    let (y_min, y_max) = pts
        .iter()
        .fold((1.0f64, 0.0f64), |(lo, hi), &(_, m, _)| (lo.min(m), hi.max(m)));
    let y_lo = (y_min - 0.05).max(0.0);
    let y_hi = (y_max + 0.05).min(1.0);
    let x_of = |l: f64| ml + plot_w * l;
    let y_of = |a: f64| 30.0 + plot_h * (1.0 - (a - y_lo) / (y_hi - y_lo).max(1e-9));

    let mut svg = String::new();
    writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">"
    )
    .unwrap();
    writeln!(svg, "<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>").unwrap();
    writeln!(
        svg,
        "<line x1=\"{ml}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>",
        h - mb,
        w - 30.0,
        h - mb
    )
    .unwrap();
    writeln!(
        svg,
        "<line x1=\"{ml}\" y1=\"30\" x2=\"{ml}\" y2=\"{}\" stroke=\"black\"/>",
        h - mb
    )
    .unwrap();
    for i in 0..=10 {
        let l = i as f64 / 10.0;
        writeln!(
            svg,
            "<text x=\"{}\" y=\"{}\" font-size=\"11\" text-anchor=\"middle\">{l:.1}</text>",
            x_of(l),
            h - mb + 16.0
        )
        .unwrap();
    }
    for i in 0..=4 {
        let a = y_lo + (y_hi - y_lo) * i as f64 / 4.0;
        writeln!(
            svg,
            "<text x=\"{}\" y=\"{}\" font-size=\"11\" text-anchor=\"end\">{}</text>",
            ml - 6.0,
            y_of(a) + 4.0,
            fmt_pct1(a)
        )
        .unwrap();
    }
    if !pts.is_empty() {
        let path_d: Vec<String> = pts
            .iter()
            .map(|&(l, m, _)| format!("{:.2},{:.2}", x_of(l), y_of(m)))
            .collect();
        writeln!(
            svg,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"#c23\" stroke-width=\"2\"/>",
            path_d.join(" ")
        )
        .unwrap();
        for &(l, m, _) in pts {
            writeln!(
                svg,
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"#c23\"/>",
                x_of(l),
                y_of(m)
            )
            .unwrap();
        }
    }
    writeln!(
        svg,
        "<text x=\"{}\" y=\"20\" font-size=\"13\" text-anchor=\"middle\">{label}: accuracy vs lambda</text>",
        ml + plot_w / 2.0
    )
    .unwrap();
    writeln!(
        svg,
        "<text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\">lambda</text>",
        ml + plot_w / 2.0,
        h - 12.0
    )
    .unwrap();
    writeln!(svg, "</svg>").unwrap();
    std::fs::write(path, svg).map_err(|e| Error::io(path, e))
}

// ---------------------------------------------------------------------------
// Embedding export

/// Write one CSV row per clip: `clip_id,city,scene,e0..e{D-1}`, using
/// the checkpoint's frozen encoder in inference mode.
pub fn export_embeddings(ckpt: &Checkpoint, manifest: &Manifest, out_path: &Path) -> Result<()> {
    let preprocessing = preprocessing_from_snapshot(ckpt)?;
    let (encoder, _) = ckpt.build_models()?;
    let d = encoder.embedding_dim();
    let mut out = String::from("clip_id,city,scene");
    for j in 0..d {
        write!(out, ",e{j}").unwrap();
    }
    out.push('\n');
    let indices: Vec<usize> = (0..manifest.records.len()).collect();
    for chunk in indices.chunks(EVAL_BATCH) {
        let specs = chunk
            .iter()
            .map(|&i| {
                let rec = &manifest.records[i];
                features::extract_one(&rec.path, &rec.clip_id, &preprocessing)
            })
            .collect::<Result<Vec<_>>>()?;
        let refs: Vec<&Spectrogram> = specs.iter().collect();
        let batch = features::SpecBatch::from_spectrograms(&refs)?;
        let emb = encoder.encode(&batch)?;
        for (row, &i) in chunk.iter().enumerate() {
            let rec = &manifest.records[i];
            write!(out, "{},{},{}", rec.clip_id, rec.city_label, rec.scene_label).unwrap();
            for j in 0..d {
                write!(out, ",{}", emb[row * d + j]).unwrap();
            }
            out.push('\n');
        }
    }
    std::fs::write(out_path, out).map_err(|e| Error::io(out_path, e))
}

/// Mean and sample standard deviation, for seed-aggregated reporting.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let std = if values.len() > 1 {
        (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (values.len() - 1) as f64)
            .sqrt()
    } else {
        0.0
    };
    (mean, std)
}

/// Quick percentage with one decimal for log lines.
pub fn pct(frac: f64) -> String {
    let _ = round1(frac);
    fmt_pct1(frac)
}
