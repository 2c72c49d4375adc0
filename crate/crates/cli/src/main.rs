//! Command-line driver: synthetic corpus generation, the three training
//! stages, evaluation, lambda sweeps, and embedding export, all driven
//! by JSON config files with `--set` overrides.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use city2scene::dataset::{self, Manifest, Split, SplitFiles, SyntheticConfig};
use city2scene::eval;
use city2scene::models::Checkpoint;
use city2scene::pipeline::{self, StageConfig, TeacherSet};
use city2scene::util::fmt_pct1;

#[derive(Parser)]
#[command(
    name = "city2scene",
    about = "Three-stage acoustic scene classification with city-feature distillation",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// JSON configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory for run artifacts.
    #[arg(long)]
    out: PathBuf,
    /// Override a config field by dotted path, e.g. `--set kd.lambda=0.3`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a deterministic synthetic multi-city corpus.
    Synth {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Stage 1: train the city classifier.
    Stage1 {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        seed: Option<u64>,
        /// Comma-separated seed list; runs once per seed under
        /// `<out>/seed_<n>/` and reports mean and standard deviation.
        #[arg(long, value_delimiter = ',')]
        seeds: Vec<u64>,
    },
    /// Stage 2: freeze the city encoder, train the scene head (teacher).
    Stage2 {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_delimiter = ',')]
        seeds: Vec<u64>,
    },
    /// Stage 3: distill the city teachers into a scene student.
    Stage3 {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_delimiter = ',')]
        seeds: Vec<u64>,
        /// Teacher checkpoint path (repeatable); overrides the config.
        #[arg(long = "teachers")]
        teachers: Vec<PathBuf>,
        /// Override kd.lambda.
        #[arg(long)]
        lambda: Option<f64>,
    },
    /// Evaluate a checkpoint on a manifest split.
    Eval {
        #[command(flatten)]
        common: CommonArgs,
        /// Compare against a baseline metrics.json and write the
        /// class-wise report.
        #[arg(long)]
        compare: Option<PathBuf>,
    },
    /// Train students across a lambda grid and seed list.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        /// Lambda grid as `start:stop:step`, e.g. `0.1:0.9:0.1`.
        #[arg(long)]
        lambdas: String,
        #[arg(long, value_delimiter = ',', required = true)]
        seeds: Vec<u64>,
        #[arg(long = "teachers")]
        teachers: Vec<PathBuf>,
        /// Rows trained concurrently.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Export frozen-encoder embeddings to CSV.
    ExportEmbeddings {
        #[command(flatten)]
        common: CommonArgs,
    },
}

// ---------------------------------------------------------------------------
// Config documents

#[derive(serde::Serialize, serde::Deserialize, Clone)]
struct DatasetConfig {
    meta: PathBuf,
    #[serde(default)]
    train_split: Option<PathBuf>,
    #[serde(default)]
    test_split: Option<PathBuf>,
    /// Stratified split applied when no split files are given.
    #[serde(default)]
    test_fraction: Option<f64>,
    #[serde(default)]
    split_seed: u64,
}

impl DatasetConfig {
    fn resolve(&self) -> Result<Manifest, city2scene::Error> {
        let split_files = match (&self.train_split, &self.test_split) {
            (Some(train), Some(test)) => Some(SplitFiles {
                train: train.clone(),
                test: test.clone(),
            }),
            (None, None) => None,
            _ => {
                return Err(city2scene::Error::Config(
                    "dataset needs both train_split and test_split, or neither".into(),
                ))
            }
        };
        let manifest = dataset::parse_manifest(&self.meta, split_files.as_ref())?;
        match (split_files.is_some(), self.test_fraction) {
            (false, Some(frac)) => {
                let split = manifest.stratified_split(frac, self.split_seed)?;
                for w in &split.warnings {
                    eprintln!("warning: {w}");
                }
                Ok(split.manifest)
            }
            _ => Ok(manifest),
        }
    }
}

#[derive(serde::Serialize, serde::Deserialize, Clone)]
struct ExperimentDoc {
    dataset: DatasetConfig,
    #[serde(flatten)]
    stage: StageConfig,
}

#[derive(serde::Serialize, serde::Deserialize, Clone)]
struct SynthDoc {
    #[serde(flatten)]
    synth: SyntheticConfig,
    #[serde(default)]
    test_fraction: Option<f64>,
    #[serde(default)]
    split_seed: u64,
}

#[derive(serde::Serialize, serde::Deserialize, Clone)]
struct EvalDoc {
    dataset: DatasetConfig,
    checkpoint: PathBuf,
    #[serde(default = "default_split")]
    split: String,
}

fn default_split() -> String {
    "test".into()
}

// ---------------------------------------------------------------------------

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<(), String> {
    match cli.command {
        Command::Synth { common } => cmd_synth(&common),
        Command::Stage1 { common, seed, seeds } => cmd_stage(&common, 1, seed, &seeds, &[], None),
        Command::Stage2 { common, seed, seeds } => cmd_stage(&common, 2, seed, &seeds, &[], None),
        Command::Stage3 {
            common,
            seed,
            seeds,
            teachers,
            lambda,
        } => cmd_stage(&common, 3, seed, &seeds, &teachers, lambda),
        Command::Eval { common, compare } => cmd_eval(&common, compare.as_deref()),
        Command::Sweep {
            common,
            lambdas,
            seeds,
            teachers,
            jobs,
        } => cmd_sweep(&common, &lambdas, &seeds, &teachers, jobs),
        Command::ExportEmbeddings { common } => cmd_export(&common),
    }
}

/// Load a JSON config, apply `--set` overrides, deserialize.
fn load_config<T: serde::de::DeserializeOwned>(
    common: &CommonArgs,
) -> Result<(T, serde_json::Value), String> {
    let text = std::fs::read_to_string(&common.config)
        .map_err(|e| format!("cannot read config {}: {e}", common.config.display()))?;
    let mut value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| format!("config is not valid JSON: {e}"))?;
    for kv in &common.set {
        let (key, raw) = kv
            .split_once('=')
            .ok_or_else(|| format!("--set expects KEY=VALUE, got '{kv}'"))?;
        let parsed: serde_json::Value =
            serde_json::from_str(raw).unwrap_or(serde_json::Value::String(raw.to_string()));
        set_path(&mut value, key, parsed)?;
    }
    let typed: T = serde_json::from_value(value.clone())
        .map_err(|e| format!("config does not match the expected schema: {e}"))?;
    Ok((typed, value))
}

fn set_path(root: &mut serde_json::Value, path: &str, new: serde_json::Value) -> Result<(), String> {
    let mut cur = root;
    let parts: Vec<&str> = path.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        if i + 1 == parts.len() {
            match cur {
                serde_json::Value::Object(map) => {
                    map.insert(part.to_string(), new);
                    return Ok(());
                }
                _ => return Err(format!("--set path '{path}' does not address an object")),
            }
        }
        cur = match cur {
            serde_json::Value::Object(map) => map
                .entry(part.to_string())
                .or_insert_with(|| serde_json::Value::Object(Default::default())),
            _ => return Err(format!("--set path '{path}' does not address an object")),
        };
    }
    Ok(())
}

fn ensure_out(dir: &Path) -> Result<(), String> {
    std::fs::create_dir_all(dir).map_err(|e| format!("cannot create {}: {e}", dir.display()))
}

fn echo_config(dir: &Path, value: &serde_json::Value) -> Result<(), String> {
    let text = serde_json::to_string_pretty(value).expect("config serializes");
    std::fs::write(dir.join("config.json"), text)
        .map_err(|e| format!("cannot write config.json: {e}"))
}

fn cmd_synth(common: &CommonArgs) -> Result<(), String> {
    let (doc, resolved) = load_config::<SynthDoc>(common)?;
    ensure_out(&common.out)?;
    let manifest =
        dataset::generate_synthetic(&doc.synth, &common.out).map_err(|e| e.to_string())?;
    let n = manifest.records.len();
    if let Some(frac) = doc.test_fraction {
        let split = manifest
            .stratified_split(frac, doc.split_seed)
            .map_err(|e| e.to_string())?;
        for w in &split.warnings {
            eprintln!("warning: {w}");
        }
        split
            .manifest
            .write(
                &common.out.join("meta.tsv"),
                Some(&SplitFiles {
                    train: common.out.join("train.tsv"),
                    test: common.out.join("test.tsv"),
                }),
            )
            .map_err(|e| e.to_string())?;
        println!(
            "wrote {n} clips ({} train / {} test) to {}",
            split.manifest.indices_in(Split::Train).len(),
            split.manifest.indices_in(Split::Test).len(),
            common.out.display()
        );
    } else {
        println!("wrote {n} clips to {}", common.out.display());
    }
    echo_config(&common.out, &resolved)
}

fn cmd_stage(
    common: &CommonArgs,
    stage: u8,
    seed: Option<u64>,
    seeds: &[u64],
    teacher_flags: &[PathBuf],
    lambda: Option<f64>,
) -> Result<(), String> {
    let (mut doc, mut resolved) = load_config::<ExperimentDoc>(common)?;
    doc.stage.stage = stage;
    if let Some(s) = seed {
        doc.stage.seed = s;
    }
    if !teacher_flags.is_empty() {
        doc.stage.teacher_checkpoints = teacher_flags.to_vec();
    }
    if let Some(l) = lambda {
        let mut kd = doc.stage.kd.unwrap_or_default();
        kd.lambda = l;
        doc.stage.kd = Some(kd);
    }
    if stage == 3 && doc.stage.teacher_checkpoints.is_empty() {
        return Err(city2scene::Error::NoTeachers.to_string());
    }
    // Reflect applied flag overrides in the echoed config.
    merge_stage_into(&mut resolved, &doc.stage);
    doc.stage.validate().map_err(|e| e.to_string())?;
    let manifest = doc.dataset.resolve().map_err(|e| e.to_string())?;

    let seed_list: Vec<u64> = if seeds.is_empty() {
        vec![doc.stage.seed]
    } else {
        seeds.to_vec()
    };
    let multi = seed_list.len() > 1;
    let mut accuracies = Vec::new();
    for &s in &seed_list {
        let mut cfg = doc.stage.clone();
        cfg.seed = s;
        let out_dir = if multi {
            common.out.join(format!("seed_{s}"))
        } else {
            common.out.clone()
        };
        ensure_out(&out_dir)?;
        let summary =
            pipeline::execute_stage(&cfg, &manifest, &out_dir).map_err(|e| e.to_string())?;
        for w in &summary.output.warnings {
            eprintln!("warning: {w}");
        }
        println!(
            "stage{stage} seed {s}: train_accuracy={} test_accuracy={} -> {}",
            fmt_pct1(summary.output.train_accuracy),
            fmt_pct1(summary.output.test_accuracy),
            out_dir.display()
        );
        accuracies.push(summary.output.test_accuracy);
    }
    if multi {
        let (mean, std) = eval::mean_std(&accuracies);
        println!(
            "stage{stage} over {} seeds: test_accuracy mean={} std={:.2}",
            seed_list.len(),
            fmt_pct1(mean),
            std * 100.0
        );
    }
    ensure_out(&common.out)?;
    echo_config(&common.out, &resolved)
}

fn merge_stage_into(resolved: &mut serde_json::Value, stage: &StageConfig) {
    if let (serde_json::Value::Object(dst), serde_json::Value::Object(src)) =
        (&mut *resolved, stage.snapshot())
    {
        for (k, v) in src {
            dst.insert(k, v);
        }
    }
}

fn cmd_eval(common: &CommonArgs, compare: Option<&Path>) -> Result<(), String> {
    let (doc, resolved) = load_config::<EvalDoc>(common)?;
    let manifest = doc.dataset.resolve().map_err(|e| e.to_string())?;
    let ckpt = Checkpoint::load(&doc.checkpoint).map_err(|e| e.to_string())?;
    let split = match doc.split.as_str() {
        "train" => Split::Train,
        "test" => Split::Test,
        other => return Err(format!("unknown split '{other}' (use train or test)")),
    };
    let metrics = eval::evaluate(&ckpt, &manifest, split).map_err(|e| e.to_string())?;
    ensure_out(&common.out)?;
    std::fs::write(common.out.join("metrics.json"), metrics.to_json())
        .map_err(|e| format!("cannot write metrics.json: {e}"))?;
    println!(
        "overall={} class_mean={} n_eval={}",
        fmt_pct1(metrics.overall),
        fmt_pct1(metrics.class_mean),
        metrics.n_eval
    );
    if let Some(baseline_path) = compare {
        let text = std::fs::read_to_string(baseline_path)
            .map_err(|e| format!("cannot read {}: {e}", baseline_path.display()))?;
        let baseline: eval::Metrics =
            serde_json::from_str(&text).map_err(|e| format!("bad baseline metrics: {e}"))?;
        let report = eval::classwise_report(&baseline, &metrics).map_err(|e| e.to_string())?;
        print!("{}", report.render_text());
        std::fs::write(common.out.join("classwise.csv"), report.to_csv())
            .map_err(|e| format!("cannot write classwise.csv: {e}"))?;
        std::fs::write(common.out.join("classwise.txt"), report.render_text())
            .map_err(|e| format!("cannot write classwise.txt: {e}"))?;
    }
    echo_config(&common.out, &resolved)
}

fn parse_lambda_grid(spec: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("--lambdas expects start:stop:step, got '{spec}'"));
    }
    let parse = |s: &str| -> Result<f64, String> {
        s.parse()
            .map_err(|e| format!("bad number '{s}' in --lambdas: {e}"))
    };
    let (start, stop, step) = (parse(parts[0])?, parse(parts[1])?, parse(parts[2])?);
    if step <= 0.0 || stop < start {
        return Err("--lambdas requires stop >= start and step > 0".into());
    }
    let n = ((stop - start) / step + 0.5).floor() as usize + 1;
    // Snap accumulated float error so grids print as entered.
    Ok((0..n)
        .map(|i| ((start + i as f64 * step) * 1e9).round() / 1e9)
        .collect())
}

fn cmd_sweep(
    common: &CommonArgs,
    lambdas: &str,
    seeds: &[u64],
    teacher_flags: &[PathBuf],
    jobs: usize,
) -> Result<(), String> {
    let (mut doc, mut resolved) = load_config::<ExperimentDoc>(common)?;
    doc.stage.stage = 3;
    if !teacher_flags.is_empty() {
        doc.stage.teacher_checkpoints = teacher_flags.to_vec();
    }
    if doc.stage.kd.is_none() {
        doc.stage.kd = Some(Default::default());
    }
    if doc.stage.teacher_checkpoints.is_empty() {
        return Err(city2scene::Error::NoTeachers.to_string());
    }
    merge_stage_into(&mut resolved, &doc.stage);
    doc.stage.validate().map_err(|e| e.to_string())?;
    let grid = parse_lambda_grid(lambdas)?;
    let manifest = doc.dataset.resolve().map_err(|e| e.to_string())?;
    let data = pipeline::prepare_data(&doc.stage, &manifest).map_err(|e| e.to_string())?;
    let teachers = TeacherSet::load(&doc.stage.teacher_checkpoints).map_err(|e| e.to_string())?;

    let jobs = jobs.max(1).min(grid.len());
    let sweep = if jobs == 1 {
        eval::lambda_sweep(&doc.stage, &teachers, &manifest, &data, &grid, seeds)
            .map_err(|e| e.to_string())?
    } else {
        // Fan the lambda grid out over worker threads; each runs its
        // chunk of fully independent trainings.
        let chunks: Vec<Vec<f64>> = grid
            .chunks(grid.len().div_ceil(jobs))
            .map(|c| c.to_vec())
            .collect();
        let results = std::thread::scope(|scope| {
            let handles: Vec<_> = chunks
                .iter()
                .map(|chunk| {
                    let (cfg, teachers, manifest, data) =
                        (&doc.stage, &teachers, &manifest, &data);
                    scope.spawn(move || {
                        eval::lambda_sweep(cfg, teachers, manifest, data, chunk, seeds)
                    })
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("sweep worker panicked"))
                .collect::<Vec<_>>()
        });
        let mut rows = Vec::new();
        for r in results {
            rows.extend(r.map_err(|e| e.to_string())?.rows);
        }
        eval::SweepResult::from_rows(rows)
    };

    ensure_out(&common.out)?;
    std::fs::write(common.out.join("sweep.csv"), sweep.to_csv())
        .map_err(|e| format!("cannot write sweep.csv: {e}"))?;
    eval::write_sweep_svg(&sweep, "reference-cnn", &common.out.join("sweep.svg"))
        .map_err(|e| e.to_string())?;
    for row in &sweep.rows {
        if let Some(err) = &row.error {
            eprintln!(
                "warning: lambda={} seed={} failed: {err}",
                row.lambda, row.seed
            );
        }
    }
    println!("lambda,mean,std");
    for &(lambda, mean, std) in &sweep.aggregate {
        println!("{lambda},{},{:.2}", fmt_pct1(mean), std * 100.0);
    }
    if let Some((best, mean)) = sweep.best_lambda() {
        println!("best lambda {best} with mean test accuracy {}", fmt_pct1(mean));
    }
    echo_config(&common.out, &resolved)
}

fn cmd_export(common: &CommonArgs) -> Result<(), String> {
    let (doc, resolved) = load_config::<EvalDoc>(common)?;
    let manifest = doc.dataset.resolve().map_err(|e| e.to_string())?;
    let ckpt = Checkpoint::load(&doc.checkpoint).map_err(|e| e.to_string())?;
    ensure_out(&common.out)?;
    let out_path = common.out.join("embeddings.csv");
    eval::export_embeddings(&ckpt, &manifest, &out_path).map_err(|e| e.to_string())?;
    println!(
        "wrote {} embedding rows to {}",
        manifest.records.len(),
        out_path.display()
    );
    echo_config(&common.out, &resolved)
}
