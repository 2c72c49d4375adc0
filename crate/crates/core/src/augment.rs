//! Batch augmentations: mixup, SpecAugment stripes, frequency MixStyle,
//! and device impulse-response convolution.
//!
//! Every transform takes an explicit RNG and is a bit-exact identity
//! when disabled (`p = 0`, or `alpha = 0` for mixup); disabled
//! transforms consume no randomness.

use std::path::{Path, PathBuf};

use rand::Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::SpecBatch;

/// Augmentation hyperparameters, mirroring the per-backbone table:
/// mixup `alpha`, SpecAugment `(r, p)`, Freq-MixStyle `(alpha, p)`, and
/// impulse-response augmentation `p`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct AugmentConfig {
    #[serde(default)]
    pub mixup_alpha: f64,
    #[serde(default)]
    pub specaug_ratio_r: f64,
    #[serde(default)]
    pub specaug_prob_p: f64,
    #[serde(default)]
    pub fms_alpha: f64,
    #[serde(default)]
    pub fms_prob_p: f64,
    #[serde(default)]
    pub diraug_prob_p: f64,
    /// Directory of mono impulse-response WAVs; loaded once at setup.
    #[serde(default)]
    pub ir_bank_dir: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self {
            mixup_alpha: 0.0,
            specaug_ratio_r: 0.0,
            specaug_prob_p: 0.0,
            fms_alpha: 0.0,
            fms_prob_p: 0.0,
            diraug_prob_p: 0.0,
            ir_bank_dir: None,
            seed: 0,
        }
    }
}

impl AugmentConfig {
    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        for (name, p) in [
            ("specaug_prob_p", self.specaug_prob_p),
            ("fms_prob_p", self.fms_prob_p),
            ("diraug_prob_p", self.diraug_prob_p),
        ] {
            if !(0.0..=1.0).contains(&p) {
                bad.push(format!("{name} must be in [0, 1], got {p}"));
            }
        }
        if !(0.0..=1.0).contains(&self.specaug_ratio_r) {
            bad.push(format!(
                "specaug_ratio_r must be in [0, 1], got {}",
                self.specaug_ratio_r
            ));
        }
        for (name, a) in [("mixup_alpha", self.mixup_alpha), ("fms_alpha", self.fms_alpha)] {
            if a < 0.0 {
                bad.push(format!("{name} must be >= 0, got {a}"));
            }
        }
        if self.diraug_prob_p > 0.0 && self.ir_bank_dir.is_none() {
            bad.push("diraug_prob_p > 0 requires ir_bank_dir".into());
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::ConfigFields(bad))
        }
    }
}

/// A batch of soft targets, `[batch, k]` row-major. Rows are
/// distributions: nonnegative, summing to one within 1e-6.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftLabels {
    pub data: Vec<f64>,
    pub k: usize,
}

impl SoftLabels {
    pub fn one_hot(indices: &[usize], k: usize) -> Result<Self> {
        let mut data = vec![0.0; indices.len() * k];
        for (i, &c) in indices.iter().enumerate() {
            if c >= k {
                return Err(Error::Shape(format!("class index {c} out of range for k={k}")));
            }
            data[i * k + c] = 1.0;
        }
        Ok(Self { data, k })
    }

    pub fn batch_len(&self) -> usize {
        self.data.len() / self.k
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.k..(i + 1) * self.k]
    }

    pub fn validate(&self) -> Result<()> {
        for i in 0..self.batch_len() {
            let row = self.row(i);
            if row.iter().any(|&v| v < 0.0) {
                return Err(Error::InvalidInput(format!("soft label row {i} has negative mass")));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-6 {
                return Err(Error::InvalidInput(format!(
                    "soft label row {i} sums to {sum}, expected 1"
                )));
            }
        }
        Ok(())
    }
}

/// How a mixup application paired and weighted the batch; consumers that
/// cache clean teacher logits replay this on the cached values.
#[derive(Debug, Clone, Default)]
pub struct MixupTrace {
    pub applied: bool,
    pub partners: Vec<usize>,
    pub gammas: Vec<f64>,
}

/// Pair every item with a permutation partner and mix inputs and labels
/// convexly with per-pair `gamma ~ Beta(alpha, alpha)`.
///
/// A single-item batch is returned unchanged with `applied = false`.
pub fn mixup<R: Rng>(
    batch: &mut SpecBatch,
    labels: &mut SoftLabels,
    alpha: f64,
    rng: &mut R,
) -> Result<MixupTrace> {
    if alpha == 0.0 {
        return Ok(MixupTrace::default());
    }
    if alpha < 0.0 {
        return Err(Error::Config(format!("mixup alpha must be >= 0, got {alpha}")));
    }
    if batch.batch != labels.batch_len() {
        return Err(Error::Shape(format!(
            "mixup: {} spectrograms vs {} label rows",
            batch.batch,
            labels.batch_len()
        )));
    }
    if batch.batch < 2 {
        // Degenerate batch; nothing to pair with.
        return Ok(MixupTrace::default());
    }
    let b = batch.batch;
    let mut partners: Vec<usize> = (0..b).collect();
    // Fisher-Yates via the shared rng; one permutation per batch.
    for i in (1..b).rev() {
        let j = rng.gen_range(0..=i);
        partners.swap(i, j);
    }
    let beta = Beta::new(alpha, alpha)
        .map_err(|e| Error::Config(format!("invalid mixup alpha {alpha}: {e}")))?;
    let gammas: Vec<f64> = (0..b).map(|_| beta.sample(rng)).collect();
    apply_mixup(batch, labels, &partners, &gammas)?;
    Ok(MixupTrace {
        applied: true,
        partners,
        gammas,
    })
}

/// The deterministic mixup kernel, exposed so tests can force `gamma`.
pub fn apply_mixup(
    batch: &mut SpecBatch,
    labels: &mut SoftLabels,
    partners: &[usize],
    gammas: &[f64],
) -> Result<()> {
    let b = batch.batch;
    if partners.len() != b || gammas.len() != b {
        return Err(Error::Shape("mixup trace length mismatch".into()));
    }
    let item = batch.item_len();
    let src = batch.data.clone();
    for i in 0..b {
        let j = partners[i];
        let g = gammas[i] as f32;
        let xi = &src[i * item..(i + 1) * item];
        let xj = &src[j * item..(j + 1) * item];
        for (o, (a, p)) in batch.item_mut(i).iter_mut().zip(xi.iter().zip(xj)) {
            *o = g * a + (1.0 - g) * p;
        }
    }
    let k = labels.k;
    let lsrc = labels.data.clone();
    for i in 0..b {
        let j = partners[i];
        let g = gammas[i];
        for c in 0..k {
            labels.data[i * k + c] = g * lsrc[i * k + c] + (1.0 - g) * lsrc[j * k + c];
        }
    }
    Ok(())
}

/// Per item, with probability `p`: zero one contiguous frequency stripe
/// and one contiguous time stripe, each of width uniform in
/// `[0, r * dim]` (post-log values are set to 0).
pub fn spec_augment<R: Rng>(batch: &mut SpecBatch, r: f64, p: f64, rng: &mut R) -> Result<()> {
    if !(0.0..=1.0).contains(&r) || !(0.0..=1.0).contains(&p) {
        return Err(Error::Config(format!("specaug r={r}, p={p} must be in [0, 1]")));
    }
    if p == 0.0 || r == 0.0 {
        return Ok(());
    }
    let (f, t) = (batch.n_mels, batch.n_frames);
    let max_f = (r * f as f64).floor() as usize;
    let max_t = (r * t as f64).floor() as usize;
    for i in 0..batch.batch {
        if rng.gen_range(0.0..1.0) >= p {
            continue;
        }
        let fw = rng.gen_range(0..=max_f);
        let f0 = rng.gen_range(0..=f - fw);
        let tw = rng.gen_range(0..=max_t);
        let t0 = rng.gen_range(0..=t - tw);
        let item = batch.item_mut(i);
        for band in f0..f0 + fw {
            item[band * t..band * t + t].iter_mut().for_each(|v| *v = 0.0);
        }
        for band in 0..f {
            item[band * t + t0..band * t + t0 + tw]
                .iter_mut()
                .for_each(|v| *v = 0.0);
        }
    }
    Ok(())
}

/// Once per batch, with probability `p`: mix per-item per-frequency
/// statistics (mean and standard deviation across time) with a shuffled
/// partner using `gamma ~ Beta(alpha, alpha)`.
pub fn freq_mixstyle<R: Rng>(batch: &mut SpecBatch, alpha: f64, p: f64, rng: &mut R) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Config(format!("fms p={p} must be in [0, 1]")));
    }
    if p == 0.0 {
        return Ok(());
    }
    if batch.batch < 2 {
        return Err(Error::Shape("freq_mixstyle needs a batch of at least 2".into()));
    }
    if rng.gen_range(0.0..1.0) >= p {
        return Ok(());
    }
    let beta = Beta::new(alpha, alpha)
        .map_err(|e| Error::Config(format!("invalid fms alpha {alpha}: {e}")))?;
    let gamma = beta.sample(rng);
    let b = batch.batch;
    let mut partners: Vec<usize> = (0..b).collect();
    for i in (1..b).rev() {
        let j = rng.gen_range(0..=i);
        partners.swap(i, j);
    }
    apply_freq_mixstyle(batch, &partners, gamma);
    Ok(())
}

/// The deterministic Freq-MixStyle kernel, exposed so tests can force
/// `gamma` and the pairing.
pub fn apply_freq_mixstyle(batch: &mut SpecBatch, partners: &[usize], gamma: f64) {
    let (b, f, t) = (batch.batch, batch.n_mels, batch.n_frames);
    let eps = 1e-6f64;
    // Per item, per frequency bin: mean and std across time.
    let mut mean = vec![0.0f64; b * f];
    let mut std = vec![0.0f64; b * f];
    for i in 0..b {
        let item = batch.item(i);
        for band in 0..f {
            let row = &item[band * t..(band + 1) * t];
            let m = row.iter().map(|&v| v as f64).sum::<f64>() / t as f64;
            let var = row
                .iter()
                .map(|&v| {
                    let d = v as f64 - m;
                    d * d
                })
                .sum::<f64>()
                / t as f64;
            mean[i * f + band] = m;
            std[i * f + band] = var.sqrt();
        }
    }
    for i in 0..b {
        let j = partners[i];
        for band in 0..f {
            let (mi, si) = (mean[i * f + band], std[i * f + band]);
            let (mj, sj) = (mean[j * f + band], std[j * f + band]);
            let mixed_m = gamma * mi + (1.0 - gamma) * mj;
            let mixed_s = gamma * si + (1.0 - gamma) * sj;
            let denom = si.max(eps);
            let item = batch.item_mut(i);
            for v in &mut item[band * t..(band + 1) * t] {
                let norm = (*v as f64 - mi) / denom;
                *v = (norm * mixed_s + mixed_m) as f32;
            }
        }
    }
}

/// A bank of mono impulse responses loaded from a directory of WAVs.
#[derive(Debug, Clone, Default)]
pub struct IrBank {
    pub irs: Vec<Vec<f32>>,
}

impl IrBank {
    pub fn load(dir: &Path, sample_rate_hz: u32) -> Result<Self> {
        let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
            .map_err(|e| Error::io(dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "wav"))
            .collect();
        paths.sort();
        let mut irs = Vec::with_capacity(paths.len());
        for p in paths {
            irs.push(crate::features::load_audio(&p, sample_rate_hz)?);
        }
        Ok(Self { irs })
    }

    pub fn is_empty(&self) -> bool {
        self.irs.is_empty()
    }
}

/// Per item, with probability `p`: convolve with a random impulse
/// response from the bank and renormalize to the item's original peak.
/// Applied in the waveform domain before feature extraction.
pub fn dir_aug<R: Rng>(
    waveforms: &mut [Vec<f32>],
    p: f64,
    ir_bank: &IrBank,
    rng: &mut R,
) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Config(format!("diraug p={p} must be in [0, 1]")));
    }
    if p == 0.0 {
        return Ok(());
    }
    if ir_bank.is_empty() {
        return Err(Error::Config(
            "diraug enabled with an empty impulse-response bank".into(),
        ));
    }
    for wave in waveforms.iter_mut() {
        if rng.gen_range(0.0..1.0) >= p {
            continue;
        }
        let ir = &ir_bank.irs[rng.gen_range(0..ir_bank.irs.len())];
        *wave = convolve_renormalized(wave, ir);
    }
    Ok(())
}

/// Direct convolution truncated to the input length, rescaled so the
/// output peak matches the input peak.
pub fn convolve_renormalized(x: &[f32], ir: &[f32]) -> Vec<f32> {
    let n = x.len();
    let mut y = vec![0.0f32; n];
    for (i, out) in y.iter_mut().enumerate() {
        let mut acc = 0.0f64;
        let k_max = ir.len().min(i + 1);
        for k in 0..k_max {
            acc += ir[k] as f64 * x[i - k] as f64;
        }
        *out = acc as f32;
    }
    let in_peak = x.iter().fold(0.0f32, |m, &v| m.max(v.abs()));
    let out_peak = y.iter().fold(0.0f32, |m, &v| m.max(v.abs()));
    if out_peak > 0.0 && in_peak > 0.0 {
        let scale = in_peak / out_peak;
        for v in &mut y {
            *v *= scale;
        }
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn batch(b: usize, f: usize, t: usize, seed: u64) -> SpecBatch {
        let mut state = seed;
        let data: Vec<f32> = (0..b * f * t)
            .map(|_| {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
                (state >> 33) as f32 / (1u64 << 31) as f32 * 4.0 - 2.0
            })
            .collect();
        SpecBatch {
            data,
            batch: b,
            n_mels: f,
            n_frames: t,
        }
    }

    #[test]
    fn disabled_transforms_are_bit_exact_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let orig = batch(4, 8, 10, 7);
        let mut labels = SoftLabels::one_hot(&[0, 1, 2, 0], 3).unwrap();
        let labels_orig = labels.clone();

        let mut b = orig.clone();
        let trace = mixup(&mut b, &mut labels, 0.0, &mut rng).unwrap();
        assert!(!trace.applied);
        assert_eq!(b, orig);
        assert_eq!(labels, labels_orig);

        let mut b = orig.clone();
        spec_augment(&mut b, 0.0, 1.0, &mut rng).unwrap();
        assert_eq!(b, orig);
        let mut b = orig.clone();
        spec_augment(&mut b, 0.2, 0.0, &mut rng).unwrap();
        assert_eq!(b, orig);

        let mut b = orig.clone();
        freq_mixstyle(&mut b, 0.4, 0.0, &mut rng).unwrap();
        assert_eq!(b, orig);

        let mut waves = vec![vec![0.5f32, -0.25, 0.125]];
        let orig_waves = waves.clone();
        dir_aug(&mut waves, 0.0, &IrBank::default(), &mut rng).unwrap();
        assert_eq!(waves, orig_waves);
    }

    #[test]
    fn mixup_forced_gamma_endpoints() {
        let orig = batch(3, 4, 5, 2);
        let mut labels = SoftLabels::one_hot(&[0, 1, 2], 3).unwrap();
        let mut b = orig.clone();
        // gamma = 1 keeps every item.
        apply_mixup(&mut b, &mut labels, &[2, 0, 1], &[1.0, 1.0, 1.0]).unwrap();
        assert_eq!(b, orig);
        assert_eq!(labels, SoftLabels::one_hot(&[0, 1, 2], 3).unwrap());

        // gamma = 0.25 against a one-hot partner.
        let mut labels = SoftLabels::one_hot(&[0, 1], 2).unwrap();
        let mut b = batch(2, 2, 2, 3);
        apply_mixup(&mut b, &mut labels, &[1, 0], &[0.25, 0.25]).unwrap();
        assert!((labels.row(0)[0] - 0.25).abs() < 1e-12);
        assert!((labels.row(0)[1] - 0.75).abs() < 1e-12);
        labels.validate().unwrap();
    }

    #[test]
    fn mixup_identical_pair_is_idempotent() {
        let mut b = batch(2, 4, 4, 5);
        let first = b.item(0).to_vec();
        let len = b.item_len();
        b.data.copy_within(0..len, len);
        let orig = b.clone();
        let mut labels = SoftLabels::one_hot(&[1, 1], 3).unwrap();
        apply_mixup(&mut b, &mut labels, &[1, 0], &[0.3, 0.7]).unwrap();
        for i in 0..2 {
            for (a, e) in b.item(i).iter().zip(&first) {
                assert!((a - e).abs() < 1e-6);
            }
        }
        let _ = orig;
        labels.validate().unwrap();
    }

    #[test]
    fn mixup_single_item_batch_is_identity() {
        let orig = batch(1, 4, 4, 9);
        let mut b = orig.clone();
        let mut labels = SoftLabels::one_hot(&[0], 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let trace = mixup(&mut b, &mut labels, 0.3, &mut rng).unwrap();
        assert!(!trace.applied);
        assert_eq!(b, orig);
    }

    #[test]
    fn mixup_labels_stay_distributions() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..20 {
            let mut b = batch(6, 4, 4, 11);
            let mut labels = SoftLabels::one_hot(&[0, 1, 2, 3, 0, 1], 4).unwrap();
            mixup(&mut b, &mut labels, 0.3, &mut rng).unwrap();
            labels.validate().unwrap();
        }
    }

    #[test]
    fn specaug_stripe_width_is_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let mut b = batch(2, 100, 20, 13);
            b.data.iter_mut().for_each(|v| *v = 1.0);
            spec_augment(&mut b, 0.2, 1.0, &mut rng).unwrap();
            for i in 0..b.batch {
                let item = b.item(i);
                // Count fully-zero frequency rows; stripe must be <= 20.
                let zero_rows = (0..100)
                    .filter(|&band| item[band * 20..(band + 1) * 20].iter().all(|&v| v == 0.0))
                    .count();
                assert!(zero_rows <= 20, "frequency stripe too wide: {zero_rows}");
            }
        }
    }

    #[test]
    fn specaug_masks_are_contiguous_zeros() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut b = batch(1, 30, 40, 17);
        b.data.iter_mut().for_each(|v| *v = 2.5);
        spec_augment(&mut b, 0.3, 1.0, &mut rng).unwrap();
        let item = b.item(0);
        let zero_rows: Vec<usize> = (0..30)
            .filter(|&band| item[band * 40..(band + 1) * 40].iter().all(|&v| v == 0.0))
            .collect();
        for w in zero_rows.windows(2) {
            assert_eq!(w[1], w[0] + 1, "frequency stripe not contiguous");
        }
    }

    #[test]
    fn fms_gamma_one_restores_own_stats() {
        let orig = batch(3, 6, 12, 23);
        let mut b = orig.clone();
        apply_freq_mixstyle(&mut b, &[1, 2, 0], 1.0);
        for (a, e) in b.data.iter().zip(&orig.data) {
            assert!((a - e).abs() < 1e-4, "{a} vs {e}");
        }
    }

    #[test]
    fn fms_identical_items_unchanged_for_any_gamma() {
        let mut b = batch(2, 4, 8, 29);
        let len = b.item_len();
        b.data.copy_within(0..len, len);
        let orig = b.clone();
        for gamma in [0.0, 0.3, 0.8] {
            let mut c = orig.clone();
            apply_freq_mixstyle(&mut c, &[1, 0], gamma);
            for (a, e) in c.data.iter().zip(&orig.data) {
                assert!((a - e).abs() < 1e-4);
            }
        }
    }

    #[test]
    fn fms_constant_rows_do_not_produce_nans() {
        let mut b = batch(2, 3, 5, 31);
        // Zero-variance frequency rows exercise the epsilon floor.
        for v in b.item_mut(0) {
            *v = 1.0;
        }
        apply_freq_mixstyle(&mut b, &[1, 0], 0.5);
        assert!(b.data.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn diraug_delta_is_identity_up_to_peak() {
        let wave: Vec<f32> = (0..64).map(|i| ((i as f32) * 0.37).sin() * 0.5).collect();
        let out = convolve_renormalized(&wave, &[1.0]);
        for (a, e) in out.iter().zip(&wave) {
            assert!((a - e).abs() < 1e-6);
        }
        // Scaled delta: renormalization brings the peak back.
        let out = convolve_renormalized(&wave, &[0.25]);
        for (a, e) in out.iter().zip(&wave) {
            assert!((a - e).abs() < 1e-6);
        }
    }

    #[test]
    fn diraug_delayed_delta_shifts() {
        let wave: Vec<f32> = (0..32).map(|i| i as f32 / 32.0).collect();
        let lag = 5;
        let mut ir = vec![0.0f32; lag + 1];
        ir[lag] = 1.0;
        let out = convolve_renormalized(&wave, &ir);
        // Direct-convolution oracle: y[i] = x[i - lag], truncated.
        let peak_in = wave.iter().fold(0.0f32, |m, &v| m.max(v.abs()));
        let shifted: Vec<f32> = (0..32)
            .map(|i| if i >= lag { wave[i - lag] } else { 0.0 })
            .collect();
        let peak_out = shifted.iter().fold(0.0f32, |m, &v| m.max(v.abs()));
        let scale = peak_in / peak_out;
        for (a, e) in out.iter().zip(&shifted) {
            assert!((a - e * scale).abs() < 1e-6);
        }
    }

    #[test]
    fn diraug_empty_bank_is_config_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut waves = vec![vec![0.1f32; 8]];
        assert!(dir_aug(&mut waves, 0.5, &IrBank::default(), &mut rng).is_err());
        let cfg = AugmentConfig {
            diraug_prob_p: 0.5,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn transforms_are_deterministic_given_seed() {
        let run = |seed: u64| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut b = batch(5, 8, 10, 3);
            let mut labels = SoftLabels::one_hot(&[0, 1, 2, 1, 0], 3).unwrap();
            mixup(&mut b, &mut labels, 0.3, &mut rng).unwrap();
            freq_mixstyle(&mut b, 0.4, 0.8, &mut rng).unwrap();
            spec_augment(&mut b, 0.2, 1.0, &mut rng).unwrap();
            (b, labels)
        };
        let (b1, l1) = run(7);
        let (b2, l2) = run(7);
        assert_eq!(b1, b2);
        assert_eq!(l1, l2);
        let (b3, _) = run(8);
        assert_ne!(b1, b3);
    }

    #[test]
    fn shapes_never_change() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let mut b = batch(4, 8, 10, 3);
        let mut labels = SoftLabels::one_hot(&[0, 1, 2, 1], 3).unwrap();
        mixup(&mut b, &mut labels, 0.3, &mut rng).unwrap();
        freq_mixstyle(&mut b, 0.4, 1.0, &mut rng).unwrap();
        spec_augment(&mut b, 0.2, 1.0, &mut rng).unwrap();
        assert_eq!((b.batch, b.n_mels, b.n_frames), (4, 8, 10));
        assert_eq!(b.data.len(), 4 * 8 * 10);
    }
}
