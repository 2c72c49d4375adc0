//! The reference backbone: a small residual CNN encoder plus a single
//! fully connected classifier.
//!
//! Layout: stem conv (3x3, stride 1) into three downsampling residual
//! blocks with the configured widths, then global average pooling over
//! frequency and time, so the embedding width is duration-invariant.
//! Everything before the final fully connected layer is the encoder.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::SpecBatch;
use crate::models::nn::{
    global_avg_pool, global_avg_pool_backward, relu_backward, relu_forward, Batch4, BatchNorm2d,
    Conv2d, Linear, ParamRef, Trainable,
};

/// Encoder architecture description, persisted in checkpoints.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct EncoderSpec {
    /// Expected frequency dimension of the input.
    pub n_mels: usize,
    /// Embedding width D (equals the last block width for the
    /// reference CNN).
    pub embedding_dim: usize,
    #[serde(default = "default_widths")]
    pub widths: [usize; 3],
    /// External-backbone identifier; when set, the reference CNN is
    /// bypassed and the registered plugin provides the model.
    #[serde(default)]
    pub plugin: Option<String>,
}

fn default_widths() -> [usize; 3] {
    [32, 64, 128]
}

impl EncoderSpec {
    pub fn reference(n_mels: usize) -> Self {
        Self {
            n_mels,
            embedding_dim: 128,
            widths: default_widths(),
            plugin: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.plugin.is_some() {
            return Ok(());
        }
        if self.n_mels == 0 {
            return Err(Error::Config("encoder n_mels must be positive".into()));
        }
        if self.widths.contains(&0) {
            return Err(Error::Config("encoder widths must be positive".into()));
        }
        if self.embedding_dim != self.widths[2] {
            return Err(Error::Config(format!(
                "embedding_dim {} must equal the last width {}",
                self.embedding_dim, self.widths[2]
            )));
        }
        Ok(())
    }
}

/// Inference contract every encoder satisfies (reference or plugin).
pub trait Encoder: Send + Sync {
    fn embedding_dim(&self) -> usize;
    /// Deterministic (eval-mode) embeddings, `[batch, D]`.
    fn encode(&self, batch: &SpecBatch) -> Result<Vec<f32>>;
}

/// Inference contract for classifier heads.
pub trait Classifier: Send + Sync {
    fn n_classes(&self) -> usize;
    /// Raw logits, `[batch, K]`; no softmax applied.
    fn classify(&self, embeddings: &[f32], batch: usize) -> Result<Vec<f32>>;
}

struct ResBlock {
    conv: Conv2d,
    bn: BatchNorm2d,
    sc_conv: Conv2d,
    sc_bn: BatchNorm2d,
}

impl ResBlock {
    fn new<R: Rng>(in_c: usize, out_c: usize, rng: &mut R) -> Self {
        Self {
            conv: Conv2d::new(in_c, out_c, 3, 2, 1, rng),
            bn: BatchNorm2d::new(out_c),
            sc_conv: Conv2d::new(in_c, out_c, 1, 2, 0, rng),
            sc_bn: BatchNorm2d::new(out_c),
        }
    }
}

impl Trainable for ResBlock {
    fn visit_params(&mut self, f: &mut dyn FnMut(ParamRef<'_>)) {
        self.conv.visit_params(f);
        self.bn.visit_params(f);
        self.sc_conv.visit_params(f);
        self.sc_bn.visit_params(f);
    }

    fn visit_values(&self, f: &mut dyn FnMut(&[f32])) {
        self.conv.visit_values(f);
        self.bn.visit_values(f);
        self.sc_conv.visit_values(f);
        self.sc_bn.visit_values(f);
    }

    fn visit_buffers(&self, f: &mut dyn FnMut(&[f32])) {
        self.bn.visit_buffers(f);
        self.sc_bn.visit_buffers(f);
    }

    fn visit_buffers_mut(&mut self, f: &mut dyn FnMut(&mut [f32])) {
        self.bn.visit_buffers_mut(f);
        self.sc_bn.visit_buffers_mut(f);
    }
}

/// The trainable reference encoder.
pub struct RefCnnEncoder {
    pub spec: EncoderSpec,
    stem: Conv2d,
    stem_bn: BatchNorm2d,
    blocks: Vec<ResBlock>,
}

/// Activations saved by a training-mode forward pass.
pub struct EncoderTape {
    input: Batch4,
    stem_pre: Batch4,
    stem_bn_cache: crate::models::nn::BnCache,
    stem_out: Batch4,
    // per block: (input to the block, bn caches, post-relu output)
    block_inputs: Vec<Batch4>,
    block_bn: Vec<crate::models::nn::BnCache>,
    block_sc_bn: Vec<crate::models::nn::BnCache>,
    block_outputs: Vec<Batch4>,
    pooled_hw: (usize, usize),
}

impl RefCnnEncoder {
    pub fn new<R: Rng>(spec: EncoderSpec, rng: &mut R) -> Result<Self> {
        spec.validate()?;
        if spec.plugin.is_some() {
            return Err(Error::Config(
                "plugin-backed encoders are constructed through the plugin registry".into(),
            ));
        }
        let [w0, w1, w2] = spec.widths;
        let stem = Conv2d::new(1, w0, 3, 1, 1, rng);
        let stem_bn = BatchNorm2d::new(w0);
        let blocks = vec![
            ResBlock::new(w0, w0, rng),
            ResBlock::new(w0, w1, rng),
            ResBlock::new(w1, w2, rng),
        ];
        Ok(Self {
            spec,
            stem,
            stem_bn,
            blocks,
        })
    }

    fn check_input(&self, batch: &SpecBatch) -> Result<()> {
        if batch.n_mels != self.spec.n_mels {
            return Err(Error::Shape(format!(
                "encoder expects {} mel bands, batch has {}",
                self.spec.n_mels, batch.n_mels
            )));
        }
        Ok(())
    }

    fn to_batch4(batch: &SpecBatch) -> Batch4 {
        Batch4 {
            data: batch.data.clone(),
            b: batch.batch,
            c: 1,
            h: batch.n_mels,
            w: batch.n_frames,
        }
    }

    /// Training-mode forward; returns embeddings and the tape for
    /// [`RefCnnEncoder::backward`].
    pub fn forward_train(&mut self, batch: &SpecBatch) -> Result<(Vec<f32>, EncoderTape)> {
        self.check_input(batch)?;
        let input = Self::to_batch4(batch);
        let stem_pre = self.stem.forward(&input);
        let (mut stem_out, stem_bn_cache) = self.stem_bn.forward_train(&stem_pre);
        relu_forward(&mut stem_out);

        let mut block_inputs = Vec::with_capacity(3);
        let mut block_bn = Vec::with_capacity(3);
        let mut block_sc_bn = Vec::with_capacity(3);
        let mut block_outputs = Vec::with_capacity(3);
        let mut cur = stem_out.clone();
        for blk in &mut self.blocks {
            block_inputs.push(cur.clone());
            let main_pre = blk.conv.forward(&cur);
            let (main, bn_cache) = blk.bn.forward_train(&main_pre);
            let sc_pre = blk.sc_conv.forward(&cur);
            let (sc, sc_cache) = blk.sc_bn.forward_train(&sc_pre);
            let mut out = main;
            for (o, s) in out.data.iter_mut().zip(&sc.data) {
                *o += s;
            }
            relu_forward(&mut out);
            block_bn.push(bn_cache);
            block_sc_bn.push(sc_cache);
            block_outputs.push(out.clone());
            cur = out;
        }
        let emb = global_avg_pool(&cur);
        let tape = EncoderTape {
            input,
            stem_pre,
            stem_bn_cache,
            stem_out,
            block_inputs,
            block_bn,
            block_sc_bn,
            block_outputs,
            pooled_hw: (cur.h, cur.w),
        };
        Ok((emb, tape))
    }

    /// Backpropagate from embedding gradients; parameter gradients are
    /// accumulated in place.
    pub fn backward(&mut self, tape: &EncoderTape, demb: &[f32]) {
        let last = tape.block_outputs.last().expect("tape has blocks");
        let mut grad = global_avg_pool_backward(demb, last.b, last.c, tape.pooled_hw.0, tape.pooled_hw.1);
        for bi in (0..self.blocks.len()).rev() {
            let blk = &mut self.blocks[bi];
            relu_backward(&tape.block_outputs[bi], &mut grad);
            // Sum node: the same gradient flows into both branches.
            let g_main = blk.bn.backward(&tape.block_bn[bi], &grad);
            let g_main_in = blk.conv.backward(&tape.block_inputs[bi], &g_main);
            let g_sc = blk.sc_bn.backward(&tape.block_sc_bn[bi], &grad);
            let g_sc_in = blk.sc_conv.backward(&tape.block_inputs[bi], &g_sc);
            grad = g_main_in;
            for (g, s) in grad.data.iter_mut().zip(&g_sc_in.data) {
                *g += s;
            }
        }
        relu_backward(&tape.stem_out, &mut grad);
        let g_pre = self.stem_bn.backward(&tape.stem_bn_cache, &grad);
        let _ = self.stem.backward(&tape.input, &g_pre);
        let _ = &tape.stem_pre;
    }

    /// Inference-mode forward using running normalization statistics.
    pub fn forward_eval(&self, batch: &SpecBatch) -> Result<Vec<f32>> {
        self.check_input(batch)?;
        let input = Self::to_batch4(batch);
        let mut cur = self.stem_bn.forward_eval(&self.stem.forward(&input));
        relu_forward(&mut cur);
        for blk in &self.blocks {
            let main = blk.bn.forward_eval(&blk.conv.forward(&cur));
            let sc = blk.sc_bn.forward_eval(&blk.sc_conv.forward(&cur));
            let mut out = main;
            for (o, s) in out.data.iter_mut().zip(&sc.data) {
                *o += s;
            }
            relu_forward(&mut out);
            cur = out;
        }
        Ok(global_avg_pool(&cur))
    }
}

impl Trainable for RefCnnEncoder {
    fn visit_params(&mut self, f: &mut dyn FnMut(ParamRef<'_>)) {
        self.stem.visit_params(f);
        self.stem_bn.visit_params(f);
        for b in &mut self.blocks {
            b.visit_params(f);
        }
    }

    fn visit_values(&self, f: &mut dyn FnMut(&[f32])) {
        self.stem.visit_values(f);
        self.stem_bn.visit_values(f);
        for b in &self.blocks {
            b.visit_values(f);
        }
    }

    fn visit_buffers(&self, f: &mut dyn FnMut(&[f32])) {
        self.stem_bn.visit_buffers(f);
        for b in &self.blocks {
            b.visit_buffers(f);
        }
    }

    fn visit_buffers_mut(&mut self, f: &mut dyn FnMut(&mut [f32])) {
        self.stem_bn.visit_buffers_mut(f);
        for b in &mut self.blocks {
            b.visit_buffers_mut(f);
        }
    }
}

impl Encoder for RefCnnEncoder {
    fn embedding_dim(&self) -> usize {
        self.spec.embedding_dim
    }

    fn encode(&self, batch: &SpecBatch) -> Result<Vec<f32>> {
        self.forward_eval(batch)
    }
}

/// The single fully connected classification head.
pub struct LinearClassifier {
    pub linear: Linear,
}

impl LinearClassifier {
    pub fn new<R: Rng>(in_dim: usize, n_classes: usize, rng: &mut R) -> Self {
        Self {
            linear: Linear::new(in_dim, n_classes, rng),
        }
    }

    pub fn forward(&self, embeddings: &[f32], batch: usize) -> Result<Vec<f32>> {
        if embeddings.len() != batch * self.linear.in_f {
            return Err(Error::Shape(format!(
                "classifier expects {} values for batch {batch}, got {}",
                batch * self.linear.in_f,
                embeddings.len()
            )));
        }
        Ok(self.linear.forward(embeddings, batch))
    }

    pub fn backward(&mut self, embeddings: &[f32], batch: usize, dlogits: &[f32]) -> Vec<f32> {
        self.linear.backward(embeddings, batch, dlogits)
    }
}

impl Trainable for LinearClassifier {
    fn visit_params(&mut self, f: &mut dyn FnMut(ParamRef<'_>)) {
        self.linear.visit_params(f);
    }

    fn visit_values(&self, f: &mut dyn FnMut(&[f32])) {
        self.linear.visit_values(f);
    }
}

impl Classifier for LinearClassifier {
    fn n_classes(&self) -> usize {
        self.linear.out_f
    }

    fn classify(&self, embeddings: &[f32], batch: usize) -> Result<Vec<f32>> {
        self.forward(embeddings, batch)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn spec_batch(b: usize, f: usize, t: usize, seed: u64) -> SpecBatch {
        let mut state = seed;
        let data = (0..b * f * t)
            .map(|_| {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
                (state >> 33) as f32 / (1u64 << 31) as f32 * 2.0 - 1.0
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
    fn default_reference_model_is_under_200k_params() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let enc = RefCnnEncoder::new(EncoderSpec::reference(64), &mut rng).unwrap();
        let clf = LinearClassifier::new(128, 10, &mut rng);
        let total = enc.param_count() + clf.param_count();
        assert!(total < 200_000, "parameter count {total}");
        assert!(total > 50_000, "suspiciously small: {total}");
    }

    #[test]
    fn embedding_dim_is_duration_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let spec = EncoderSpec {
            n_mels: 16,
            embedding_dim: 24,
            widths: [8, 16, 24],
            plugin: None,
        };
        let enc = RefCnnEncoder::new(spec, &mut rng).unwrap();
        for t in [16usize, 63, 101] {
            let emb = enc.encode(&spec_batch(3, 16, t, 5)).unwrap();
            assert_eq!(emb.len(), 3 * 24, "t={t}");
            assert!(emb.iter().all(|v| v.is_finite()));
        }
    }

    #[test]
    fn encode_shape_contract_wide_input() {
        // 8 spectrograms of 256x63 through a 64-dim encoder.
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let spec = EncoderSpec {
            n_mels: 256,
            embedding_dim: 64,
            widths: [16, 32, 64],
            plugin: None,
        };
        let enc = RefCnnEncoder::new(spec, &mut rng).unwrap();
        let emb = enc.encode(&spec_batch(8, 256, 63, 3)).unwrap();
        assert_eq!(emb.len(), 8 * 64);
    }

    #[test]
    fn eval_mode_is_deterministic_and_shape_checked() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let spec = EncoderSpec {
            n_mels: 16,
            embedding_dim: 16,
            widths: [8, 8, 16],
            plugin: None,
        };
        let enc = RefCnnEncoder::new(spec, &mut rng).unwrap();
        let batch = spec_batch(2, 16, 20, 9);
        let a = enc.encode(&batch).unwrap();
        let b = enc.encode(&batch).unwrap();
        assert_eq!(a, b);
        // wrong frequency dimension
        let bad = spec_batch(2, 8, 20, 9);
        assert!(enc.encode(&bad).is_err());
    }

    #[test]
    fn zero_input_gives_finite_embeddings() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let spec = EncoderSpec {
            n_mels: 16,
            embedding_dim: 16,
            widths: [8, 8, 16],
            plugin: None,
        };
        let enc = RefCnnEncoder::new(spec, &mut rng).unwrap();
        let batch = SpecBatch {
            data: vec![0.0; 2 * 16 * 20],
            batch: 2,
            n_mels: 16,
            n_frames: 20,
        };
        let emb = enc.encode(&batch).unwrap();
        assert!(emb.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn classifier_contract() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut clf = LinearClassifier::new(6, 10, &mut rng);
        // zero weights, zero bias -> all-zero logits
        clf.linear.weight.fill(0.0);
        let logits = clf.classify(&[1.0; 6], 1).unwrap();
        assert_eq!(logits, vec![0.0; 10]);
        // output width K
        let logits = clf.classify(&[0.5; 12], 2).unwrap();
        assert_eq!(logits.len(), 20);
        // dim mismatch
        assert!(clf.classify(&[0.5; 7], 1).is_err());
    }

    #[test]
    fn training_step_end_to_end_reduces_loss() {
        use crate::losses::{self, Target};
        use crate::models::nn::Adam;

        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let spec = EncoderSpec {
            n_mels: 8,
            embedding_dim: 8,
            widths: [4, 8, 8],
            plugin: None,
        };
        let mut enc = RefCnnEncoder::new(spec, &mut rng).unwrap();
        let mut clf = LinearClassifier::new(8, 3, &mut rng);
        let batch = spec_batch(6, 8, 10, 77);
        let targets = [0usize, 1, 2, 0, 1, 2];

        let mut opt_e = Adam::new(&mut enc, 0.0, false);
        let mut opt_c = Adam::new(&mut clf, 0.0, false);
        let mut losses_seen = Vec::new();
        for _ in 0..30 {
            enc.zero_grad();
            clf.zero_grad();
            let (emb, tape) = enc.forward_train(&batch).unwrap();
            let logits = clf.forward(&emb, 6).unwrap();
            let z: Vec<f64> = logits.iter().map(|&v| v as f64).collect();
            let mut loss = 0.0;
            let mut dz = vec![0.0f32; z.len()];
            for (i, &t) in targets.iter().enumerate() {
                let row = &z[i * 3..(i + 1) * 3];
                loss += losses::cross_entropy(row, Target::Index(t)).unwrap();
                let g = losses::combined_grad(
                    row,
                    None,
                    Target::Index(t),
                    1.0,
                    1.0,
                    losses::KlDirection::TeacherReference,
                )
                .unwrap();
                for (j, &gv) in g.iter().enumerate() {
                    dz[i * 3 + j] = (gv / 6.0) as f32;
                }
            }
            loss /= 6.0;
            losses_seen.push(loss);
            let demb = clf.backward(&emb, 6, &dz);
            enc.backward(&tape, &demb);
            opt_e.step(&mut enc, 0.01);
            opt_c.step(&mut clf, 0.01);
        }
        let first = losses_seen[0];
        let last = *losses_seen.last().unwrap();
        assert!(
            last < first * 0.5,
            "training did not reduce loss: {first} -> {last}"
        );
    }

    #[test]
    fn export_import_round_trip_preserves_hash() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let spec = EncoderSpec {
            n_mels: 8,
            embedding_dim: 8,
            widths: [4, 8, 8],
            plugin: None,
        };
        let enc = RefCnnEncoder::new(spec.clone(), &mut rng).unwrap();
        let flat = enc.export_params();
        let hash = enc.param_hash();
        let mut enc2 = RefCnnEncoder::new(spec, &mut rng).unwrap();
        assert_ne!(enc2.param_hash(), hash);
        enc2.import_params(&flat).unwrap();
        assert_eq!(enc2.param_hash(), hash);
        // wrong length rejected
        assert!(enc2.import_params(&flat[..flat.len() - 1]).is_err());
    }
}
