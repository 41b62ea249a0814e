//! Named hyperparameter presets for the reproduced systems.
//!
//! Epochs, weight decay, generation lengths and the extractive classifier's
//! batch size, sequence length and learning rate are the published values.
//! Fields that were never reported (learning rate, batch size and input
//! length of the abstractive models) carry common fine-tuning defaults.

use serde::{Deserialize, Serialize};

use super::{BackendError, GenerationParams, SummarizerSpec, DEFAULT_MAX_TOKENS, DEFAULT_SEED};
use crate::Language;

const DEFAULT_LEARNING_RATE: f64 = 5e-5;
const DEFAULT_BATCH_SIZE: u32 = 8;
const DEFAULT_MAX_INPUT: u32 = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AugmentKind {
    RightShift,
    Noise,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PresetRole {
    Abstractive,
    /// Sentence classifier used as an extractive scorer.
    Extractive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Preset {
    pub name: String,
    pub language: Language,
    pub role: PresetRole,
    pub spec: SummarizerSpec,
    pub generation: GenerationParams,
    #[serde(default)]
    pub augment: Vec<AugmentKind>,
}

/// A translate-then-summarize pipeline built on an English preset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelinePreset {
    pub name: String,
    pub source_language: Language,
    pub backend_preset: String,
    pub generation: GenerationParams,
    pub threshold: f64,
}

struct Row {
    name: &'static str,
    language: Language,
    role: PresetRole,
    model_id: &'static str,
    epochs: u32,
    weight_decay: f64,
    learning_rate: f64,
    batch_size: u32,
    max_input_tokens: u32,
    max_tokens: u32,
    augment: &'static [AugmentKind],
}

const fn abstractive(name: &'static str, language: Language, model_id: &'static str, epochs: u32) -> Row {
    Row {
        name,
        language,
        role: PresetRole::Abstractive,
        model_id,
        epochs,
        weight_decay: 0.0,
        learning_rate: DEFAULT_LEARNING_RATE,
        batch_size: DEFAULT_BATCH_SIZE,
        max_input_tokens: DEFAULT_MAX_INPUT,
        max_tokens: DEFAULT_MAX_TOKENS,
        augment: &[],
    }
}

const PEGASUS: &str = "google/pegasus-large";
const MBART: &str = "facebook/mbart-large-cc25";
const XLSUM: &str = "csebuetnlp/mT5_multilingual_XLSum";

const ROWS: [Row; 9] = [
    Row { weight_decay: 0.01, max_tokens: 65, ..abstractive("english-pegasus", Language::English, PEGASUS, 1) },
    Row { weight_decay: 0.01, ..abstractive("english-brio", Language::English, "Yale-LILY/brio-cnndm-uncased", 1) },
    Row { max_tokens: 75, ..abstractive("english-t5", Language::English, "mrm8488/t5-base-finetuned-summarize-news", 20) },
    Row {
        role: PresetRole::Extractive,
        learning_rate: 1e-5,
        batch_size: 4,
        max_input_tokens: 512,
        ..abstractive("extractive-bert", Language::English, "sentence-transformers/all-mpnet-base-v2", 3)
    },
    Row { max_tokens: 60, augment: &[AugmentKind::Noise], ..abstractive("hindi-indicbart", Language::Hindi, "ai4bharat/IndicBART", 2) },
    abstractive("hindi-xlsum", Language::Hindi, XLSUM, 2),
    abstractive("hindi-mbart", Language::Hindi, MBART, 1),
    Row { augment: &[AugmentKind::Noise], ..abstractive("gujarati-mbart", Language::Gujarati, MBART, 1) },
    Row { max_tokens: 75, ..abstractive("gujarati-xlsum", Language::Gujarati, XLSUM, 5) },
];

impl From<&Row> for Preset {
    fn from(r: &Row) -> Self {
        Preset {
            name: r.name.into(),
            language: r.language,
            role: r.role,
            spec: SummarizerSpec {
                model_id: r.model_id.into(),
                epochs: r.epochs,
                weight_decay: r.weight_decay,
                learning_rate: r.learning_rate,
                batch_size: r.batch_size,
                max_input_tokens: r.max_input_tokens,
            },
            generation: GenerationParams { max_tokens: r.max_tokens, seed: DEFAULT_SEED },
            augment: r.augment.to_vec(),
        }
    }
}

/// The nine model presets, in registry order.
pub fn presets() -> Vec<Preset> {
    ROWS.iter().map(Preset::from).collect()
}

pub fn find_preset(name: &str) -> Result<Preset, BackendError> {
    ROWS.iter()
        .find(|r| r.name == name)
        .map(Preset::from)
        .ok_or_else(|| BackendError::UnknownPreset(name.to_string()))
}

pub fn pipeline_presets() -> Vec<PipelinePreset> {
    vec![PipelinePreset {
        name: "gujarati-translate-map".into(),
        source_language: Language::Gujarati,
        backend_preset: "english-pegasus".into(),
        generation: GenerationParams { max_tokens: 85, seed: DEFAULT_SEED },
        threshold: crate::crosslingual::DEFAULT_THRESHOLD,
    }]
}

pub fn find_pipeline_preset(name: &str) -> Result<PipelinePreset, BackendError> {
    pipeline_presets()
        .into_iter()
        .find(|p| p.name == name)
        .ok_or_else(|| BackendError::UnknownPreset(name.to_string()))
}
