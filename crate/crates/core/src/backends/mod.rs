//! Summarizer backends.
//!
//! Every backend implements [`SummarizerBackend`]. Neural models live out
//! of process and are reached through the line-delimited protocol in
//! [`adapter`]; [`LeadBaseline`] is the in-process deterministic stand-in.
//! Callers go through [`fine_tune`] and [`summarize`], which enforce the
//! contract checks shared by all backends.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{DatasetSplit, SplitKind};
use crate::Language;

pub mod adapter;
mod baseline;
pub mod presets;

pub use adapter::{AdapterBackend, AdapterClient};
pub use baseline::{lead_baseline, LeadBaseline};
pub use presets::{find_pipeline_preset, find_preset, pipeline_presets, presets, AugmentKind, PipelinePreset, Preset, PresetRole};

/// Generation length the shared task organizers suggested; used when a
/// preset does not name its own.
pub const DEFAULT_MAX_TOKENS: u32 = 75;
pub const DEFAULT_SEED: u64 = 13;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BackendError {
    #[error("input article is empty")]
    EmptyInput,
    #[error("invalid summarizer spec: {0}")]
    InvalidSpec(String),
    #[error("backend unavailable: {0}")]
    BackendUnavailable(String),
    #[error("adapter reported an error: {0}")]
    Adapter(String),
    #[error("adapter protocol violation: {0}")]
    Protocol(String),
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
}

/// Training hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummarizerSpec {
    /// Opaque model identifier, passed through to the adapter.
    pub model_id: String,
    pub epochs: u32,
    pub weight_decay: f64,
    pub learning_rate: f64,
    pub batch_size: u32,
    pub max_input_tokens: u32,
}

impl SummarizerSpec {
    pub fn validate(&self) -> Result<(), BackendError> {
        let bad = |msg: String| Err(BackendError::InvalidSpec(msg));
        if self.model_id.trim().is_empty() {
            return bad("model_id is empty".into());
        }
        if self.epochs == 0 {
            return bad("epochs must be positive".into());
        }
        if !(self.weight_decay.is_finite() && self.weight_decay >= 0.0) {
            return bad(format!("weight_decay must be nonnegative, got {}", self.weight_decay));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad(format!("learning_rate must be positive, got {}", self.learning_rate));
        }
        if self.batch_size == 0 {
            return bad("batch_size must be positive".into());
        }
        if self.max_input_tokens == 0 {
            return bad("max_input_tokens must be positive".into());
        }
        Ok(())
    }
}

/// Inference controls. `max_tokens` is in backend-native tokens for
/// neural adapters and whitespace words for the baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationParams {
    pub max_tokens: u32,
    pub seed: u64,
}

impl GenerationParams {
    pub fn new(max_tokens: u32) -> Self {
        GenerationParams { max_tokens, seed: DEFAULT_SEED }
    }

    pub fn validate(&self) -> Result<(), BackendError> {
        if self.max_tokens == 0 {
            return Err(BackendError::InvalidSpec("max_tokens must be at least 1".into()));
        }
        Ok(())
    }
}

impl Default for GenerationParams {
    fn default() -> Self {
        GenerationParams::new(DEFAULT_MAX_TOKENS)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Capabilities {
    pub trainable: bool,
    pub languages: BTreeSet<Language>,
    /// How many `summarize` calls the backend accepts at once.
    pub max_parallel: usize,
}

/// Identifies the model state a backend generates from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelHandle {
    pub backend: String,
    pub model_id: String,
    /// Checkpoint reported by the adapter after training; `None` for the
    /// untrained base model.
    pub checkpoint: Option<String>,
    /// Hash of the spec the checkpoint was trained with.
    pub spec_hash: Option<String>,
}

pub trait SummarizerBackend: Send + Sync {
    fn name(&self) -> &str;

    fn capabilities(&self) -> Capabilities;

    /// Handle for generating from the model without fine-tuning.
    fn base_handle(&self) -> ModelHandle;

    /// Backend-specific training. Called by [`fine_tune`] after the common
    /// checks pass.
    fn train(&self, dataset: &DatasetSplit, spec: &SummarizerSpec) -> Result<ModelHandle, BackendError>;

    /// Backend-specific generation. Called by [`summarize`].
    fn generate(&self, handle: &ModelHandle, article: &str, params: &GenerationParams) -> Result<String, BackendError>;
}

/// Fine-tunes `backend` on a training split.
pub fn fine_tune(
    backend: &dyn SummarizerBackend,
    dataset: &DatasetSplit,
    spec: &SummarizerSpec,
) -> Result<ModelHandle, BackendError> {
    spec.validate()?;
    if dataset.kind != SplitKind::Train {
        return Err(BackendError::InvalidSpec(format!("fine-tuning needs a train split, got {}", dataset.kind)));
    }
    if dataset.is_empty() {
        return Err(BackendError::InvalidSpec("training split is empty".into()));
    }
    if !backend.capabilities().trainable {
        return Err(BackendError::InvalidSpec(format!("backend `{}` is not trainable", backend.name())));
    }
    let mut handle = backend.train(dataset, spec)?;
    handle.spec_hash = Some(config_hash(spec));
    Ok(handle)
}

/// Generates a summary, rejecting empty inputs and empty outputs.
pub fn summarize(
    backend: &dyn SummarizerBackend,
    handle: &ModelHandle,
    article: &str,
    params: &GenerationParams,
) -> Result<String, BackendError> {
    if article.trim().is_empty() {
        return Err(BackendError::EmptyInput);
    }
    params.validate()?;
    let summary = backend.generate(handle, article, params)?;
    if summary.trim().is_empty() {
        return Err(BackendError::Protocol(format!("backend `{}` returned an empty summary", backend.name())));
    }
    Ok(summary)
}

/// Hex SHA-256 of the value's JSON serialization. Struct fields serialize
/// in declaration order, so equal values always hash equally.
pub fn config_hash<T: Serialize + ?Sized>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("config types serialize to JSON");
    hex::encode(Sha256::digest(bytes))
}
