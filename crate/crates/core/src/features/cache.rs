//! Optional on-disk feature cache.
//!
//! Entries are keyed by `(clip_id, config hash)`: a raw little-endian
//! f32 blob next to a JSON sidecar recording the config and shape.

use std::fs;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::mel::{SpectrogramConfig, Spectrogram};

#[derive(Serialize, Deserialize)]
struct Sidecar {
    clip_id: String,
    n_mels: usize,
    n_frames: usize,
    config: SpectrogramConfig,
}

pub struct FeatureCache {
    dir: PathBuf,
}

impl FeatureCache {
    pub fn new(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        Ok(Self { dir })
    }

    fn stem(&self, clip_id: &str, cfg: &SpectrogramConfig) -> PathBuf {
        self.dir.join(format!("{clip_id}-{:016x}", cfg.config_hash()))
    }

    pub fn get(&self, clip_id: &str, cfg: &SpectrogramConfig) -> Option<Spectrogram> {
        let stem = self.stem(clip_id, cfg);
        let sidecar: Sidecar =
            serde_json::from_slice(&fs::read(stem.with_extension("json")).ok()?).ok()?;
        if sidecar.config != *cfg || sidecar.clip_id != clip_id {
            return None;
        }
        let blob = fs::read(stem.with_extension("bin")).ok()?;
        if blob.len() != sidecar.n_mels * sidecar.n_frames * 4 {
            return None;
        }
        let values = blob
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
            .collect();
        Some(Spectrogram {
            values,
            n_mels: sidecar.n_mels,
            n_frames: sidecar.n_frames,
            clip_id: clip_id.to_string(),
        })
    }

    pub fn put(&self, spec: &Spectrogram, cfg: &SpectrogramConfig) -> Result<()> {
        let stem = self.stem(&spec.clip_id, cfg);
        let sidecar = Sidecar {
            clip_id: spec.clip_id.clone(),
            n_mels: spec.n_mels,
            n_frames: spec.n_frames,
            config: cfg.clone(),
        };
        let json = serde_json::to_vec_pretty(&sidecar).expect("sidecar serializes");
        fs::write(stem.with_extension("json"), json).map_err(|e| Error::io(&self.dir, e))?;
        let mut blob = Vec::with_capacity(spec.values.len() * 4);
        for v in &spec.values {
            blob.extend_from_slice(&v.to_le_bytes());
        }
        fs::write(stem.with_extension("bin"), blob).map_err(|e| Error::io(&self.dir, e))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_and_rejects_config_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let cache = FeatureCache::new(dir.path()).unwrap();
        let cfg = SpectrogramConfig {
            sample_rate_hz: 16_000,
            window_ms: 64.0,
            hop_ms: 32.0,
            n_mels: 4,
            fmin_hz: 0.0,
            fmax_hz: None,
            log_offset: 1e-5,
        };
        let spec = Spectrogram {
            values: vec![1.5, -2.25, 0.0, 3.0, 4.0, 5.0, 6.0, 7.0],
            n_mels: 4,
            n_frames: 2,
            clip_id: "clip-a".into(),
        };
        assert!(cache.get("clip-a", &cfg).is_none());
        cache.put(&spec, &cfg).unwrap();
        let loaded = cache.get("clip-a", &cfg).unwrap();
        assert_eq!(loaded, spec);

        let mut other = cfg.clone();
        other.n_mels = 8;
        assert!(cache.get("clip-a", &other).is_none());
    }
}
