//! Waveform loading and log-mel feature extraction.

pub mod audio;
pub mod cache;
pub mod fft;
pub mod mel;

pub use audio::{load_audio, resample, wav_duration_s};
pub use cache::FeatureCache;
pub use mel::{mel_spectrogram, MelFilterbank, Spectrogram, SpectrogramConfig};

use std::path::Path;

use crate::dataset::Manifest;
use crate::error::{Error, Result};
use crate::par;

/// A rectangular batch of spectrograms, `[batch, n_mels, n_frames]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpecBatch {
    pub data: Vec<f32>,
    pub batch: usize,
    pub n_mels: usize,
    pub n_frames: usize,
}

impl SpecBatch {
    pub fn from_spectrograms(specs: &[&Spectrogram]) -> Result<Self> {
        let first = specs
            .first()
            .ok_or_else(|| Error::Shape("empty spectrogram batch".into()))?;
        let (f, t) = (first.n_mels, first.n_frames);
        let mut data = Vec::with_capacity(specs.len() * f * t);
        for s in specs {
            if s.n_mels != f || s.n_frames != t {
                return Err(Error::Shape(format!(
                    "spectrogram {} is {}x{}, batch is {f}x{t}",
                    s.clip_id, s.n_mels, s.n_frames
                )));
            }
            data.extend_from_slice(&s.values);
        }
        Ok(SpecBatch {
            data,
            batch: specs.len(),
            n_mels: f,
            n_frames: t,
        })
    }

    pub fn item_len(&self) -> usize {
        self.n_mels * self.n_frames
    }

    pub fn item(&self, i: usize) -> &[f32] {
        &self.data[i * self.item_len()..(i + 1) * self.item_len()]
    }

    pub fn item_mut(&mut self, i: usize) -> &mut [f32] {
        let len = self.item_len();
        &mut self.data[i * len..(i + 1) * len]
    }
}

/// Extract features for every record of a manifest, in record order.
///
/// Clips are decoded, resampled to the configured rate, and transformed.
/// With a cache, hits skip the whole pipeline.
pub fn extract_all(
    manifest: &Manifest,
    cfg: &SpectrogramConfig,
    cache: Option<&FeatureCache>,
) -> Result<Vec<Spectrogram>> {
    cfg.validate()?;
    let results: Vec<Result<Spectrogram>> = par::map_index(manifest.records.len(), |i| {
        let rec = &manifest.records[i];
        if let Some(c) = cache {
            if let Some(hit) = c.get(&rec.clip_id, cfg) {
                return Ok(hit);
            }
        }
        let spec = extract_one(&rec.path, &rec.clip_id, cfg)?;
        if let Some(c) = cache {
            c.put(&spec, cfg)?;
        }
        Ok(spec)
    });
    results.into_iter().collect()
}

/// Decode one file and compute its log-mel spectrogram.
pub fn extract_one(path: &Path, clip_id: &str, cfg: &SpectrogramConfig) -> Result<Spectrogram> {
    let wave = load_audio(path, cfg.sample_rate_hz)?;
    mel_spectrogram(&wave, cfg, clip_id)
}
