//! Log-mel spectrogram extraction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::fft::power_spectrum;

/// Preprocessing hyperparameters. Times are in milliseconds; sample
/// counts are derived by rounding against the sample rate. The FFT size
/// is the window length rounded up to the next power of two.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SpectrogramConfig {
    pub sample_rate_hz: u32,
    pub window_ms: f64,
    pub hop_ms: f64,
    pub n_mels: usize,
    #[serde(default)]
    pub fmin_hz: f64,
    /// Defaults to Nyquist when absent.
    #[serde(default)]
    pub fmax_hz: Option<f64>,
    #[serde(default = "default_log_offset")]
    pub log_offset: f64,
}

fn default_log_offset() -> f64 {
    1e-5
}

impl SpectrogramConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sample_rate_hz == 0 {
            return Err(Error::Config("sample_rate_hz must be positive".into()));
        }
        if !(self.window_ms > 0.0) || !(self.hop_ms > 0.0) {
            return Err(Error::Config("window_ms and hop_ms must be positive".into()));
        }
        if self.hop_ms > self.window_ms {
            return Err(Error::Config(format!(
                "hop_ms ({}) must not exceed window_ms ({})",
                self.hop_ms, self.window_ms
            )));
        }
        if self.n_mels == 0 {
            return Err(Error::Config("n_mels must be at least 1".into()));
        }
        let nyquist = self.sample_rate_hz as f64 / 2.0;
        if let Some(fmax) = self.fmax_hz {
            if fmax > nyquist {
                return Err(Error::Config(format!(
                    "fmax_hz ({fmax}) exceeds Nyquist ({nyquist})"
                )));
            }
            if fmax <= self.fmin_hz {
                return Err(Error::Config("fmax_hz must exceed fmin_hz".into()));
            }
        }
        if !(self.log_offset > 0.0) {
            return Err(Error::Config("log_offset must be positive".into()));
        }
        Ok(())
    }

    pub fn window_samples(&self) -> usize {
        (self.window_ms * self.sample_rate_hz as f64 / 1000.0).round() as usize
    }

    pub fn hop_samples(&self) -> usize {
        (self.hop_ms * self.sample_rate_hz as f64 / 1000.0).round() as usize
    }

    pub fn n_fft(&self) -> usize {
        self.window_samples().next_power_of_two()
    }

    pub fn fmax_or_nyquist(&self) -> f64 {
        self.fmax_hz.unwrap_or(self.sample_rate_hz as f64 / 2.0)
    }

    /// Frame count for a clip of `n_samples` (center-padded framing).
    pub fn frame_count(&self, n_samples: usize) -> usize {
        n_samples / self.hop_samples() + 1
    }

    /// Stable hash of the config, used to key feature caches.
    pub fn config_hash(&self) -> u64 {
        let json = serde_json::to_string(self).expect("config serializes");
        crate::util::fnv1a64(json.as_bytes())
    }
}

/// A log-mel spectrogram: `n_mels x n_frames`, row-major by mel band.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    pub values: Vec<f32>,
    pub n_mels: usize,
    pub n_frames: usize,
    pub clip_id: String,
}

impl Spectrogram {
    pub fn band(&self, m: usize) -> &[f32] {
        &self.values[m * self.n_frames..(m + 1) * self.n_frames]
    }

    pub fn band_mean(&self, m: usize) -> f64 {
        self.band(m).iter().map(|&v| v as f64).sum::<f64>() / self.n_frames as f64
    }
}

/// Triangular mel filterbank (HTK mel scale, peak-one triangles).
pub struct MelFilterbank {
    /// Per band: (first_bin, weights over consecutive bins).
    bands: Vec<(usize, Vec<f64>)>,
    centers_hz: Vec<f64>,
    pub n_bins: usize,
}

fn hz_to_mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

fn mel_to_hz(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

impl MelFilterbank {
    pub fn new(cfg: &SpectrogramConfig) -> Self {
        let n_fft = cfg.n_fft();
        let n_bins = n_fft / 2 + 1;
        let sr = cfg.sample_rate_hz as f64;
        let mel_lo = hz_to_mel(cfg.fmin_hz);
        let mel_hi = hz_to_mel(cfg.fmax_or_nyquist());
        let n_mels = cfg.n_mels;
        let pts: Vec<f64> = (0..n_mels + 2)
            .map(|i| mel_to_hz(mel_lo + (mel_hi - mel_lo) * i as f64 / (n_mels + 1) as f64))
            .collect();
        let bin_hz = sr / n_fft as f64;
        let mut bands = Vec::with_capacity(n_mels);
        for m in 0..n_mels {
            let (f_lo, f_center, f_hi) = (pts[m], pts[m + 1], pts[m + 2]);
            let mut first = None;
            let mut weights = Vec::new();
            for k in 0..n_bins {
                let f = k as f64 * bin_hz;
                let w = if f <= f_lo || f >= f_hi {
                    0.0
                } else if f <= f_center {
                    (f - f_lo) / (f_center - f_lo)
                } else {
                    (f_hi - f) / (f_hi - f_center)
                };
                if w > 0.0 {
                    if first.is_none() {
                        first = Some(k);
                    }
                    weights.push(w);
                } else if first.is_some() {
                    break;
                }
            }
            // Degenerate band (narrower than one bin): keep the nearest bin
            // so every band stays total.
            if first.is_none() {
                let k = (f_center / bin_hz).round() as usize;
                first = Some(k.min(n_bins - 1));
                weights.push(1.0);
            }
            bands.push((first.unwrap(), weights));
        }
        MelFilterbank {
            bands,
            centers_hz: pts[1..=n_mels].to_vec(),
            n_bins,
        }
    }

    /// Center frequency of band `m` in Hz.
    pub fn band_center_hz(&self, m: usize) -> f64 {
        self.centers_hz[m]
    }

    /// Band index whose center is closest to `freq_hz`.
    pub fn nearest_band(&self, freq_hz: f64) -> usize {
        self.centers_hz
            .iter()
            .enumerate()
            .min_by(|a, b| {
                (a.1 - freq_hz)
                    .abs()
                    .partial_cmp(&(b.1 - freq_hz).abs())
                    .unwrap()
            })
            .unwrap()
            .0
    }

    pub fn apply(&self, power: &[f64]) -> Vec<f64> {
        debug_assert_eq!(power.len(), self.n_bins);
        self.bands
            .iter()
            .map(|(first, weights)| {
                weights
                    .iter()
                    .zip(&power[*first..])
                    .map(|(w, p)| w * p)
                    .sum()
            })
            .collect()
    }
}

/// Reflective index for center padding (no edge duplication).
fn reflect(idx: isize, len: usize) -> usize {
    let n = len as isize;
    let mut i = idx;
    // A couple of folds suffice for the paddings used here.
    while i < 0 || i >= n {
        if i < 0 {
            i = -i;
        }
        if i >= n {
            i = 2 * n - 2 - i;
        }
    }
    i as usize
}

/// Compute the log-mel spectrogram of a mono waveform.
///
/// Frames are centered with reflect padding, so the frame count is
/// `floor(n / hop) + 1` regardless of window length. Each frame is Hann
/// windowed, transformed, mapped through the mel filterbank, and floored
/// with `log(power + log_offset)`.
pub fn mel_spectrogram(waveform: &[f32], cfg: &SpectrogramConfig, clip_id: &str) -> Result<Spectrogram> {
    cfg.validate()?;
    let win = cfg.window_samples();
    let hop = cfg.hop_samples();
    if waveform.len() < win {
        return Err(Error::InvalidInput(format!(
            "waveform of {} samples is shorter than one {win}-sample window",
            waveform.len()
        )));
    }
    let n_fft = cfg.n_fft();
    let n_frames = cfg.frame_count(waveform.len());
    let fb = MelFilterbank::new(cfg);
    let window: Vec<f64> = (0..win)
        .map(|i| 0.5 * (1.0 - (2.0 * std::f64::consts::PI * i as f64 / win as f64).cos()))
        .collect();

    let mut values = vec![0.0f32; cfg.n_mels * n_frames];
    let half = (win / 2) as isize;
    let mut mel_frames: Vec<Vec<f64>> = Vec::with_capacity(n_frames);
    for t in 0..n_frames {
        let center = (t * hop) as isize;
        let mut frame = vec![0.0f64; win];
        for (i, f) in frame.iter_mut().enumerate() {
            let src = reflect(center - half + i as isize, waveform.len());
            *f = waveform[src] as f64 * window[i];
        }
        let power = power_spectrum(&frame, n_fft);
        mel_frames.push(fb.apply(&power));
    }
    for (t, mel) in mel_frames.iter().enumerate() {
        for (m, &e) in mel.iter().enumerate() {
            values[m * n_frames + t] = (e + cfg.log_offset).ln() as f32;
        }
    }
    let spec = Spectrogram {
        values,
        n_mels: cfg.n_mels,
        n_frames,
        clip_id: clip_id.to_string(),
    };
    if spec.values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("log-mel spectrogram"));
    }
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(sr: u32, window_ms: f64, hop_ms: f64, n_mels: usize) -> SpectrogramConfig {
        SpectrogramConfig {
            sample_rate_hz: sr,
            window_ms,
            hop_ms,
            n_mels,
            fmin_hz: 0.0,
            fmax_hz: None,
            log_offset: 1e-5,
        }
    }

    #[test]
    fn frame_counts_match_hop_arithmetic() {
        // 1 s at 32 kHz, 16 ms hop, 256 mels -> (256, 63)
        let c = cfg(32_000, 96.0, 16.0, 256);
        let wave = vec![0.1f32; 32_000];
        let s = mel_spectrogram(&wave, &c, "a").unwrap();
        assert_eq!((s.n_mels, s.n_frames), (256, 63));

        // 1 s at 16 kHz, 25 ms window, 10 ms hop, 128 mels -> (128, 101)
        let c = cfg(16_000, 25.0, 10.0, 128);
        let wave = vec![0.1f32; 16_000];
        let s = mel_spectrogram(&wave, &c, "b").unwrap();
        assert_eq!((s.n_mels, s.n_frames), (128, 101));
    }

    #[test]
    fn hop_rounding_from_milliseconds() {
        let c = cfg(32_000, 96.0, 23.0, 256);
        assert_eq!(c.hop_samples(), 736);
        assert_eq!(c.window_samples(), 3072);
        assert_eq!(c.n_fft(), 4096);
    }

    #[test]
    fn silence_hits_the_log_floor() {
        let c = cfg(16_000, 64.0, 32.0, 32);
        let wave = vec![0.0f32; 16_000];
        let s = mel_spectrogram(&wave, &c, "z").unwrap();
        let floor = (1e-5f64).ln() as f32;
        for &v in &s.values {
            assert_eq!(v, floor);
        }
    }

    #[test]
    fn too_short_waveform_is_an_error() {
        let c = cfg(16_000, 64.0, 32.0, 32);
        let wave = vec![0.0f32; 100];
        assert!(mel_spectrogram(&wave, &c, "x").is_err());
    }

    #[test]
    fn scaling_up_never_decreases_log_energy() {
        let c = cfg(16_000, 64.0, 32.0, 32);
        let mut state = 3u64;
        let wave: Vec<f32> = (0..16_000)
            .map(|_| {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
                ((state >> 33) as f32 / (1u64 << 31) as f32 - 0.5) * 0.2
            })
            .collect();
        let scaled: Vec<f32> = wave.iter().map(|&v| v * 3.0).collect();
        let a = mel_spectrogram(&wave, &c, "a").unwrap();
        let b = mel_spectrogram(&scaled, &c, "a").unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!(y >= x, "scaling decreased a log-mel value: {x} -> {y}");
        }
    }

    #[test]
    fn tone_at_band_center_raises_that_band() {
        let c = cfg(16_000, 64.0, 32.0, 32);
        let fb = MelFilterbank::new(&c);
        let band = 12;
        let freq = fb.band_center_hz(band);
        let quiet: Vec<f32> = vec![0.01; 16_000];
        let with_tone: Vec<f32> = (0..16_000)
            .map(|i| {
                0.01 + 0.3 * (2.0 * std::f64::consts::PI * freq * i as f64 / 16_000.0).sin() as f32
            })
            .collect();
        let a = mel_spectrogram(&quiet, &c, "a").unwrap();
        let b = mel_spectrogram(&with_tone, &c, "a").unwrap();
        assert!(b.band_mean(band) > a.band_mean(band) + 1.0);
    }

    #[test]
    fn deterministic_for_fixed_input() {
        let c = cfg(16_000, 64.0, 32.0, 32);
        let wave: Vec<f32> = (0..16_000).map(|i| (i as f32 * 0.01).sin() * 0.5).collect();
        let a = mel_spectrogram(&wave, &c, "a").unwrap();
        let b = mel_spectrogram(&wave, &c, "a").unwrap();
        assert_eq!(a.values, b.values);
    }

    #[test]
    fn config_validation_catches_bad_fields() {
        let mut c = cfg(16_000, 10.0, 20.0, 32);
        assert!(c.validate().is_err()); // hop > window
        c.hop_ms = 10.0;
        c.window_ms = 20.0;
        c.fmax_hz = Some(9_000.0); // above Nyquist
        assert!(c.validate().is_err());
    }
}
