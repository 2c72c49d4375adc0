//! WAV decoding and resampling.

use std::path::Path;

use crate::error::{Error, Result};

/// Decode a mono PCM file and resample it to `target_sample_rate_hz`.
///
/// Multichannel input is rejected rather than silently downmixed.
pub fn load_audio(path: &Path, target_sample_rate_hz: u32) -> Result<Vec<f32>> {
    let reader = hound::WavReader::open(path).map_err(|e| Error::AudioDecode {
        path: path.to_path_buf(),
        msg: e.to_string(),
    })?;
    let spec = reader.spec();
    if spec.channels != 1 {
        return Err(Error::MultiChannel {
            path: path.to_path_buf(),
            channels: spec.channels,
        });
    }
    let samples: Vec<f32> = match (spec.sample_format, spec.bits_per_sample) {
        (hound::SampleFormat::Float, 32) => reader
            .into_samples::<f32>()
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::AudioDecode {
                path: path.to_path_buf(),
                msg: e.to_string(),
            })?,
        (hound::SampleFormat::Int, bits) if bits <= 32 => {
            let scale = 1.0 / (1i64 << (bits - 1)) as f32;
            reader
                .into_samples::<i32>()
                .map(|s| s.map(|v| v as f32 * scale))
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::AudioDecode {
                    path: path.to_path_buf(),
                    msg: e.to_string(),
                })?
        }
        (fmt, bits) => {
            return Err(Error::AudioDecode {
                path: path.to_path_buf(),
                msg: format!("unsupported sample format {fmt:?}/{bits}"),
            })
        }
    };
    if spec.sample_rate == target_sample_rate_hz {
        return Ok(samples);
    }
    Ok(resample(&samples, spec.sample_rate, target_sample_rate_hz))
}

/// Duration in seconds from the WAV header, without decoding samples.
pub fn wav_duration_s(path: &Path) -> Result<f64> {
    let reader = hound::WavReader::open(path).map_err(|e| Error::AudioDecode {
        path: path.to_path_buf(),
        msg: e.to_string(),
    })?;
    let spec = reader.spec();
    Ok(reader.duration() as f64 / spec.sample_rate as f64)
}

const SINC_HALF_TAPS: usize = 32;

/// Windowed-sinc resampler (Hann window, cutoff at the lower Nyquist).
pub fn resample(input: &[f32], from_hz: u32, to_hz: u32) -> Vec<f32> {
    if from_hz == to_hz || input.is_empty() {
        return input.to_vec();
    }
    let ratio = to_hz as f64 / from_hz as f64;
    let out_len = (input.len() as f64 * ratio).round() as usize;
    // Anti-alias cutoff relative to the input rate.
    let cutoff = ratio.min(1.0) * 0.95;
    let half_width = (SINC_HALF_TAPS as f64 / cutoff).ceil() as isize;
    let mut out = vec![0.0f32; out_len];
    for (o, out_sample) in out.iter_mut().enumerate() {
        let center = o as f64 / ratio;
        let lo = center.floor() as isize - half_width;
        let hi = center.floor() as isize + half_width + 1;
        let mut acc = 0.0f64;
        for i in lo..=hi {
            if i < 0 || i as usize >= input.len() {
                continue;
            }
            let x = (i as f64 - center) * cutoff;
            let sinc = if x.abs() < 1e-12 {
                1.0
            } else {
                let px = std::f64::consts::PI * x;
                px.sin() / px
            };
            let w = 0.5 * (1.0 + (std::f64::consts::PI * (i as f64 - center) / (half_width as f64 + 1.0)).cos());
            acc += input[i as usize] as f64 * sinc * cutoff * w;
        }
        *out_sample = acc as f32;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::fft::power_spectrum;

    fn tone(freq: f64, sr: u32, seconds: f64) -> Vec<f32> {
        let n = (sr as f64 * seconds) as usize;
        (0..n)
            .map(|i| (2.0 * std::f64::consts::PI * freq * i as f64 / sr as f64).sin() as f32)
            .collect()
    }

    #[test]
    fn identity_resample_preserves_length() {
        let x = tone(440.0, 32_000, 1.0);
        assert_eq!(resample(&x, 32_000, 32_000).len(), 32_000);
    }

    #[test]
    fn downsample_halves_length() {
        let x = tone(440.0, 32_000, 1.0);
        assert_eq!(resample(&x, 32_000, 16_000).len(), 16_000);
    }

    #[test]
    fn downsampled_tone_keeps_its_frequency() {
        let x = tone(440.0, 32_000, 1.0);
        let y = resample(&x, 32_000, 16_000);
        let frame: Vec<f64> = y[4096..4096 + 8192].iter().map(|&v| v as f64).collect();
        let p = power_spectrum(&frame, 8192);
        let peak = p
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        let peak_hz = peak as f64 * 16_000.0 / 8192.0;
        assert!((peak_hz - 440.0).abs() < 4.0, "peak at {peak_hz} Hz");
    }

    #[test]
    fn peak_amplitude_roughly_preserved() {
        let x = tone(440.0, 32_000, 1.0);
        let y = resample(&x, 32_000, 16_000);
        let peak = y.iter().fold(0.0f32, |m, &v| m.max(v.abs()));
        assert!((peak - 1.0).abs() < 0.05, "peak {peak}");
    }

    #[test]
    fn multichannel_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("stereo.wav");
        let spec = hound::WavSpec {
            channels: 2,
            sample_rate: 16_000,
            bits_per_sample: 16,
            sample_format: hound::SampleFormat::Int,
        };
        let mut w = hound::WavWriter::create(&path, spec).unwrap();
        for _ in 0..100 {
            w.write_sample(0i16).unwrap();
            w.write_sample(0i16).unwrap();
        }
        w.finalize().unwrap();
        match load_audio(&path, 16_000) {
            Err(Error::MultiChannel { channels, .. }) => assert_eq!(channels, 2),
            other => panic!("expected MultiChannel error, got {other:?}"),
        }
    }

    #[test]
    fn corrupt_file_is_a_decode_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("junk.wav");
        std::fs::write(&path, b"not a wav at all").unwrap();
        assert!(matches!(load_audio(&path, 16_000), Err(Error::AudioDecode { .. })));
    }
}
