//! City2Scene: acoustic scene classification with city-feature knowledge distillation.
//!
//! The pipeline has three training stages:
//!
//! 1. train a city classifier (encoder + city head) on city labels,
//! 2. freeze the city encoder and train a scene classifier on its features,
//! 3. train a fresh scene model (the student) against ground-truth scene
//!    labels plus temperature-softened city-to-scene logits from one or
//!    more frozen teachers.
//!
//! The crate also ships a deterministic synthetic multi-city corpus
//! generator, log-mel feature extraction, the augmentation stack used in
//! training (mixup, SpecAugment, frequency MixStyle, impulse-response
//! augmentation), a small reference CNN with hand-rolled backprop, and
//! evaluation/reporting utilities (class-wise tables, lambda sweeps,
//! embedding exports).
//!
//! Batch-level math is data-parallel via rayon when the `parallel`
//! feature (on by default) is enabled; all reductions are performed in a
//! fixed order, so parallel and sequential runs produce bit-identical
//! results.

pub mod augment;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod features;
pub mod losses;
pub mod models;
pub mod par;
pub mod pipeline;
pub mod util;

pub use error::{Error, Result};
