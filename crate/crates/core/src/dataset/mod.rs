//! Manifest ingestion for TAU-convention corpora and deterministic
//! stratified splits.
//!
//! The meta file is a UTF-8 TSV with header
//! `filename<TAB>scene_label<TAB>identifier<TAB>source_label` and
//! filenames of the form `[scene]-[city]-[location]-[segment]-[device].wav`.
//! The filename is the source of truth for the city label; the
//! `identifier` column is carried as metadata only.

pub mod synth;

pub use synth::{generate_synthetic, SyntheticConfig};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Test,
}

/// One labeled clip.
#[derive(Debug, Clone, PartialEq)]
pub struct ClipRecord {
    /// Filename stem, e.g. `airport-barcelona-0-0-a`.
    pub clip_id: String,
    pub scene_label: String,
    /// Parsed from the filename (TAU convention).
    pub city_label: String,
    pub device_id: String,
    /// The meta file's `identifier` column, kept as metadata.
    pub identifier: String,
    /// Seconds, when the audio file was present to probe.
    pub duration_s: Option<f64>,
    pub path: PathBuf,
}

/// An ordered clip collection with fixed label vocabularies.
///
/// Vocabularies are the sorted distinct labels of the records, so logit
/// index `i` always corresponds to `vocab[i]` and survives round-trips.
#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub records: Vec<ClipRecord>,
    pub scene_vocab: Vec<String>,
    pub city_vocab: Vec<String>,
    pub split_assignment: BTreeMap<String, Split>,
}

/// Paths to TAU-style split files: train rows are `filename<TAB>scene_label`,
/// test rows are bare `filename`.
#[derive(Debug, Clone)]
pub struct SplitFiles {
    pub train: PathBuf,
    pub test: PathBuf,
}

/// Outcome of a stratified split; warnings name (scene, city) pairs too
/// small to stratify.
#[derive(Debug)]
pub struct StratifiedSplit {
    pub manifest: Manifest,
    pub warnings: Vec<String>,
}

const META_HEADER: &str = "filename\tscene_label\tidentifier\tsource_label";

/// Split a TAU filename stem into (scene, city, location, segment, device).
fn parse_stem(stem: &str) -> Option<(String, String, String, String, String)> {
    let parts: Vec<&str> = stem.split('-').collect();
    if parts.len() != 5 || parts.iter().any(|p| p.is_empty()) {
        return None;
    }
    Some((
        parts[0].to_string(),
        parts[1].to_string(),
        parts[2].to_string(),
        parts[3].to_string(),
        parts[4].to_string(),
    ))
}

impl Manifest {
    /// Build a manifest from records, deriving vocabularies.
    pub fn from_records(
        records: Vec<ClipRecord>,
        split_assignment: BTreeMap<String, Split>,
    ) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for r in &records {
            if !seen.insert(r.clip_id.clone()) {
                return Err(Error::InvalidInput(format!("duplicate clip_id {}", r.clip_id)));
            }
            if let Some(d) = r.duration_s {
                if !(d > 0.0) {
                    return Err(Error::InvalidInput(format!(
                        "clip {} has non-positive duration {d}",
                        r.clip_id
                    )));
                }
            }
        }
        for id in split_assignment.keys() {
            if !seen.contains(id) {
                return Err(Error::InvalidInput(format!(
                    "split assignment references unknown clip {id}"
                )));
            }
        }
        let scene_vocab: Vec<String> = records
            .iter()
            .map(|r| r.scene_label.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let city_vocab: Vec<String> = records
            .iter()
            .map(|r| r.city_label.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        Ok(Manifest {
            records,
            scene_vocab,
            city_vocab,
            split_assignment,
        })
    }

    pub fn scene_index(&self, label: &str) -> Result<usize> {
        self.scene_vocab
            .iter()
            .position(|s| s == label)
            .ok_or_else(|| Error::VocabMismatch(format!("scene label '{label}' not in vocabulary")))
    }

    pub fn city_index(&self, label: &str) -> Result<usize> {
        self.city_vocab
            .iter()
            .position(|s| s == label)
            .ok_or_else(|| Error::VocabMismatch(format!("city label '{label}' not in vocabulary")))
    }

    pub fn split_of(&self, clip_id: &str) -> Split {
        self.split_assignment.get(clip_id).copied().unwrap_or(Split::Train)
    }

    /// Record indices belonging to a split, in record order.
    pub fn indices_in(&self, split: Split) -> Vec<usize> {
        self.records
            .iter()
            .enumerate()
            .filter(|(_, r)| self.split_of(&r.clip_id) == split)
            .map(|(i, _)| i)
            .collect()
    }

    /// Serialize the meta file (and split files, when paths are given).
    pub fn write(&self, meta_path: &Path, split_files: Option<&SplitFiles>) -> Result<()> {
        let mut meta = String::new();
        meta.push_str(META_HEADER);
        meta.push('\n');
        for r in &self.records {
            writeln!(
                meta,
                "{}\t{}\t{}\t{}",
                file_name_of(&r.path),
                r.scene_label,
                r.identifier,
                r.device_id
            )
            .expect("string write");
        }
        std::fs::write(meta_path, meta).map_err(|e| Error::io(meta_path, e))?;

        if let Some(sf) = split_files {
            let mut train = String::from("filename\tscene_label\n");
            let mut test = String::from("filename\n");
            for r in &self.records {
                match self.split_of(&r.clip_id) {
                    Split::Train => {
                        writeln!(train, "{}\t{}", file_name_of(&r.path), r.scene_label)
                            .expect("string write")
                    }
                    Split::Test => {
                        writeln!(test, "{}", file_name_of(&r.path)).expect("string write")
                    }
                }
            }
            std::fs::write(&sf.train, train).map_err(|e| Error::io(&sf.train, e))?;
            std::fs::write(&sf.test, test).map_err(|e| Error::io(&sf.test, e))?;
        }
        Ok(())
    }

    /// Deterministic per-(scene, city) split. Pairs with at least two
    /// clips land in both splits; smaller pairs go to train with a
    /// warning.
    pub fn stratified_split(&self, test_fraction: f64, seed: u64) -> Result<StratifiedSplit> {
        if !(test_fraction > 0.0 && test_fraction < 1.0) {
            return Err(Error::Config(format!(
                "test_fraction must be in (0, 1), got {test_fraction}"
            )));
        }
        let mut groups: BTreeMap<(String, String), Vec<usize>> = BTreeMap::new();
        for (i, r) in self.records.iter().enumerate() {
            groups
                .entry((r.scene_label.clone(), r.city_label.clone()))
                .or_default()
                .push(i);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut assignment = BTreeMap::new();
        let mut warnings = Vec::new();
        for ((scene, city), mut idxs) in groups {
            if idxs.len() < 2 {
                warnings.push(format!(
                    "pair ({scene}, {city}) has {} clip(s); assigned to train",
                    idxs.len()
                ));
                for i in idxs {
                    assignment.insert(self.records[i].clip_id.clone(), Split::Train);
                }
                continue;
            }
            idxs.shuffle(&mut rng);
            let n_test = ((idxs.len() as f64 * test_fraction).round() as usize)
                .clamp(1, idxs.len() - 1);
            for (j, i) in idxs.into_iter().enumerate() {
                let split = if j < n_test { Split::Test } else { Split::Train };
                assignment.insert(self.records[i].clip_id.clone(), split);
            }
        }
        let mut manifest = self.clone();
        manifest.split_assignment = assignment;
        Ok(StratifiedSplit { manifest, warnings })
    }
}

fn file_name_of(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default()
}

/// Parse a TAU-convention meta file (and optional split files) into a
/// [`Manifest`]. All records default to the train split when no split
/// files are given. Audio durations are probed from files that exist
/// next to the meta file; missing files leave `duration_s` unset.
pub fn parse_manifest(meta_file: &Path, split_files: Option<&SplitFiles>) -> Result<Manifest> {
    let text = std::fs::read_to_string(meta_file).map_err(|e| Error::io(meta_file, e))?;
    let root = meta_file.parent().unwrap_or_else(|| Path::new("."));
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim_end() == META_HEADER => {}
        Some((_, header)) => {
            return Err(Error::ManifestParse {
                line: 1,
                msg: format!("unexpected header '{header}'"),
            })
        }
        None => {
            return Err(Error::ManifestParse {
                line: 1,
                msg: "empty meta file".into(),
            })
        }
    }

    let mut records = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 4 {
            return Err(Error::ManifestParse {
                line: line_no,
                msg: format!("expected 4 tab-separated columns, found {}", cols.len()),
            });
        }
        let (filename, scene_label, identifier, source_label) =
            (cols[0].trim(), cols[1].trim(), cols[2].trim(), cols[3].trim());
        let stem = filename.strip_suffix(".wav").ok_or_else(|| Error::ManifestParse {
            line: line_no,
            msg: format!("filename '{filename}' does not end in .wav"),
        })?;
        let (scene, city, _location, _segment, device) =
            parse_stem(stem).ok_or_else(|| Error::ManifestParse {
                line: line_no,
                msg: format!(
                    "filename '{filename}' does not match [scene]-[city]-[location]-[segment]-[device].wav"
                ),
            })?;
        if scene != scene_label {
            return Err(Error::ManifestParse {
                line: line_no,
                msg: format!(
                    "scene_label column '{scene_label}' disagrees with filename scene '{scene}'"
                ),
            });
        }
        let _ = source_label;
        let path = root.join(filename);
        let duration_s = crate::features::wav_duration_s(&path).ok();
        records.push(ClipRecord {
            clip_id: stem.to_string(),
            scene_label: scene,
            city_label: city,
            device_id: device,
            identifier: identifier.to_string(),
            duration_s,
            path,
        });
    }

    let mut assignment = BTreeMap::new();
    if let Some(sf) = split_files {
        let by_name: BTreeMap<String, String> = records
            .iter()
            .map(|r| (file_name_of(&r.path), r.clip_id.clone()))
            .collect();
        for (path, split, has_scene_col) in
            [(&sf.train, Split::Train, true), (&sf.test, Split::Test, false)]
        {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            for (idx, line) in text.lines().enumerate().skip(1) {
                if line.trim().is_empty() {
                    continue;
                }
                let filename = if has_scene_col {
                    line.split('\t').next().unwrap_or("").trim()
                } else {
                    line.trim()
                };
                let clip_id = by_name.get(filename).ok_or_else(|| Error::ManifestParse {
                    line: idx + 1,
                    msg: format!(
                        "split file {} names unknown clip '{filename}'",
                        path.display()
                    ),
                })?;
                assignment.insert(clip_id.clone(), split);
            }
        }
    }
    Manifest::from_records(records, assignment)
}
