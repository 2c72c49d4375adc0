//! Model architecture: the encoder/classifier contract, the reference
//! CNN backbone, and checkpoint persistence with freezing semantics.

pub mod checkpoint;
pub mod nn;
pub mod refcnn;

pub use checkpoint::{freeze_encoder, register_plugin, Checkpoint, LabelKind, Role};
pub use nn::{Adam, Trainable};
pub use refcnn::{Classifier, Encoder, EncoderSpec, LinearClassifier, RefCnnEncoder};
