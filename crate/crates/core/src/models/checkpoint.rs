//! Checkpoint persistence: one archive holding the parameter blobs, a
//! JSON config snapshot, and role/hash metadata.

use std::collections::{BTreeMap, HashMap};
use std::io::Read;
use std::path::Path;
use std::sync::RwLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::refcnn::{Classifier, Encoder, EncoderSpec, LinearClassifier, RefCnnEncoder};
use crate::models::nn::Trainable;
use crate::util::hash_f32;

const MAGIC: &[u8; 8] = b"C2SCKPT\x01";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    CityModel,
    Teacher,
    Student,
    Baseline,
}

/// What the classifier head predicts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelKind {
    Scene,
    City,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Header {
    version: u32,
    role: Role,
    frozen_encoder: bool,
    encoder_spec: EncoderSpec,
    n_classes: usize,
    target_kind: LabelKind,
    target_vocab: Vec<String>,
    encoder_hash: u64,
    classifier_hash: u64,
    encoder_len: usize,
    classifier_len: usize,
    config_snapshot: serde_json::Value,
    metrics: BTreeMap<String, f64>,
}

/// A trained (or in-training) model snapshot.
#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub role: Role,
    pub frozen_encoder: bool,
    pub encoder_spec: EncoderSpec,
    pub n_classes: usize,
    pub target_kind: LabelKind,
    /// The label vocabulary the classifier indexes into.
    pub target_vocab: Vec<String>,
    pub encoder_params: Vec<f32>,
    pub classifier_params: Vec<f32>,
    pub encoder_hash: u64,
    pub classifier_hash: u64,
    /// The resolved training configuration, verbatim.
    pub config_snapshot: serde_json::Value,
    pub metrics: BTreeMap<String, f64>,
}

impl Checkpoint {
    /// Assemble a checkpoint from raw parameter blobs.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        role: Role,
        frozen_encoder: bool,
        encoder_spec: EncoderSpec,
        encoder_params: Vec<f32>,
        n_classes: usize,
        classifier_params: Vec<f32>,
        target_kind: LabelKind,
        target_vocab: Vec<String>,
        config_snapshot: serde_json::Value,
        metrics: BTreeMap<String, f64>,
    ) -> Self {
        let encoder_hash = hash_f32(&encoder_params);
        let classifier_hash = hash_f32(&classifier_params);
        Self {
            role,
            frozen_encoder: frozen_encoder || role == Role::Teacher,
            encoder_spec,
            n_classes,
            target_kind,
            target_vocab,
            encoder_params,
            classifier_params,
            encoder_hash,
            classifier_hash,
            config_snapshot,
            metrics,
        }
    }

    /// Capture a checkpoint from live models.
    #[allow(clippy::too_many_arguments)]
    pub fn capture(
        role: Role,
        frozen_encoder: bool,
        encoder: &RefCnnEncoder,
        classifier: &LinearClassifier,
        target_kind: LabelKind,
        target_vocab: Vec<String>,
        config_snapshot: serde_json::Value,
        metrics: BTreeMap<String, f64>,
    ) -> Self {
        Self::from_parts(
            role,
            frozen_encoder,
            encoder.spec.clone(),
            encoder.export_params(),
            classifier.n_classes(),
            classifier.export_params(),
            target_kind,
            target_vocab,
            config_snapshot,
            metrics,
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.role == Role::Teacher && !self.frozen_encoder {
            return Err(Error::InvalidInput(
                "teacher checkpoints must have a frozen encoder".into(),
            ));
        }
        if self.target_vocab.len() != self.n_classes {
            return Err(Error::VocabMismatch(format!(
                "checkpoint has {} classes but a {}-label vocabulary",
                self.n_classes,
                self.target_vocab.len()
            )));
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.validate()?;
        let header = Header {
            version: 1,
            role: self.role,
            frozen_encoder: self.frozen_encoder,
            encoder_spec: self.encoder_spec.clone(),
            n_classes: self.n_classes,
            target_kind: self.target_kind,
            target_vocab: self.target_vocab.clone(),
            encoder_hash: self.encoder_hash,
            classifier_hash: self.classifier_hash,
            encoder_len: self.encoder_params.len(),
            classifier_len: self.classifier_params.len(),
            config_snapshot: self.config_snapshot.clone(),
            metrics: self.metrics.clone(),
        };
        let header_json = serde_json::to_vec(&header).expect("header serializes");
        let mut bytes =
            Vec::with_capacity(16 + header_json.len() + 4 * (self.encoder_params.len() + self.classifier_params.len()));
        bytes.extend_from_slice(MAGIC);
        bytes.extend_from_slice(&(header_json.len() as u64).to_le_bytes());
        bytes.extend_from_slice(&header_json);
        for v in self.encoder_params.iter().chain(&self.classifier_params) {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        std::fs::write(path, bytes).map_err(|e| Error::io(path, e))?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let err = |msg: String| Error::Checkpoint {
            path: path.to_path_buf(),
            msg,
        };
        let mut file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut magic = [0u8; 8];
        file.read_exact(&mut magic)
            .map_err(|e| err(format!("truncated magic: {e}")))?;
        if &magic != MAGIC {
            return Err(err("not a checkpoint file (bad magic)".into()));
        }
        let mut len_bytes = [0u8; 8];
        file.read_exact(&mut len_bytes)
            .map_err(|e| err(format!("truncated header length: {e}")))?;
        let header_len = u64::from_le_bytes(len_bytes) as usize;
        let mut header_json = vec![0u8; header_len];
        file.read_exact(&mut header_json)
            .map_err(|e| err(format!("truncated header: {e}")))?;
        let header: Header =
            serde_json::from_slice(&header_json).map_err(|e| err(format!("bad header: {e}")))?;
        if header.version != 1 {
            return Err(err(format!("unsupported checkpoint version {}", header.version)));
        }
        let read_blob = |file: &mut std::fs::File, n: usize| -> Result<Vec<f32>> {
            let mut raw = vec![0u8; n * 4];
            file.read_exact(&mut raw)
                .map_err(|e| err(format!("truncated parameter blob: {e}")))?;
            Ok(raw
                .chunks_exact(4)
                .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
                .collect())
        };
        let encoder_params = read_blob(&mut file, header.encoder_len)?;
        let classifier_params = read_blob(&mut file, header.classifier_len)?;
        let mut trailing = Vec::new();
        file.read_to_end(&mut trailing).map_err(|e| Error::io(path, e))?;
        if !trailing.is_empty() {
            return Err(err(format!("{} unexpected trailing bytes", trailing.len())));
        }
        if hash_f32(&encoder_params) != header.encoder_hash {
            return Err(err("encoder parameter hash mismatch".into()));
        }
        if hash_f32(&classifier_params) != header.classifier_hash {
            return Err(err("classifier parameter hash mismatch".into()));
        }
        let ckpt = Checkpoint {
            role: header.role,
            frozen_encoder: header.frozen_encoder,
            encoder_spec: header.encoder_spec,
            n_classes: header.n_classes,
            target_kind: header.target_kind,
            target_vocab: header.target_vocab,
            encoder_params,
            classifier_params,
            encoder_hash: header.encoder_hash,
            classifier_hash: header.classifier_hash,
            config_snapshot: header.config_snapshot,
            metrics: header.metrics,
        };
        ckpt.validate().map_err(|e| err(e.to_string()))?;
        Ok(ckpt)
    }

    /// Rebuild the runtime inference models described by this
    /// checkpoint. Plugin specs dispatch through the registry.
    pub fn build_models(&self) -> Result<(Box<dyn Encoder>, Box<dyn Classifier>)> {
        if let Some(name) = &self.encoder_spec.plugin {
            let registry = plugin_registry().read().expect("plugin registry lock");
            let factory = registry
                .get(name)
                .ok_or_else(|| Error::UnknownPlugin(name.clone()))?;
            return factory(self);
        }
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        use rand::SeedableRng;
        let mut enc = RefCnnEncoder::new(self.encoder_spec.clone(), &mut rng)?;
        enc.import_params(&self.encoder_params)?;
        let mut clf =
            LinearClassifier::new(self.encoder_spec.embedding_dim, self.n_classes, &mut rng);
        clf.import_params(&self.classifier_params)?;
        Ok((Box::new(enc), Box::new(clf)))
    }
}

/// Mark the encoder as frozen. Idempotent; training honors the flag by
/// excluding encoder parameters from optimization and running its
/// normalization in inference mode.
pub fn freeze_encoder(mut ckpt: Checkpoint) -> Checkpoint {
    ckpt.frozen_encoder = true;
    ckpt
}

type PluginFactory =
    Box<dyn Fn(&Checkpoint) -> Result<(Box<dyn Encoder>, Box<dyn Classifier>)> + Send + Sync>;

fn plugin_registry() -> &'static RwLock<HashMap<String, PluginFactory>> {
    static REGISTRY: std::sync::OnceLock<RwLock<HashMap<String, PluginFactory>>> =
        std::sync::OnceLock::new();
    REGISTRY.get_or_init(|| RwLock::new(HashMap::new()))
}

/// Register an external backbone under `EncoderSpec::plugin` name.
/// The factory must produce models satisfying the encode/classify
/// contracts.
pub fn register_plugin<F>(name: &str, factory: F)
where
    F: Fn(&Checkpoint) -> Result<(Box<dyn Encoder>, Box<dyn Classifier>)> + Send + Sync + 'static,
{
    plugin_registry()
        .write()
        .expect("plugin registry lock")
        .insert(name.to_string(), Box::new(factory));
}
