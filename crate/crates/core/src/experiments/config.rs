use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::ExperimentError;
use crate::backends::{
    config_hash, find_pipeline_preset, find_preset, AugmentKind, GenerationParams, Preset, SummarizerSpec,
    DEFAULT_MAX_TOKENS, DEFAULT_SEED,
};
use crate::corpus::SplitKind;
use crate::crosslingual::DEFAULT_THRESHOLD;
use crate::Language;

/// Name of the pipeline preset applied to `translate_map` runs.
pub const TRANSLATE_MAP_PRESET: &str = "gujarati-translate-map";
pub const DEFAULT_NOISE_RATE: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PipelineKind {
    #[default]
    Direct,
    TranslateMap,
}

/// Which summarizer serves the run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BackendChoice {
    LeadBaseline,
    /// Adapter started as a child process (command line).
    Process(String),
    /// Adapter listening on a Unix socket.
    Socket(PathBuf),
}

impl BackendChoice {
    pub fn parse(s: &str) -> Result<Self, ExperimentError> {
        let s = s.trim();
        if s == "lead-baseline" || s == "lead" {
            Ok(BackendChoice::LeadBaseline)
        } else if let Some(cmd) = s.strip_prefix("adapter:") {
            Ok(BackendChoice::Process(cmd.trim().to_string()))
        } else if let Some(path) = s.strip_prefix("socket:") {
            Ok(BackendChoice::Socket(PathBuf::from(path.trim())))
        } else {
            Err(ExperimentError::Config(format!(
                "unknown backend `{s}` (expected lead-baseline, adapter:<command> or socket:<path>)"
            )))
        }
    }
}

/// Which translator a `translate_map` run uses.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TranslatorChoice {
    Identity,
    Table(PathBuf),
    Live,
}

impl TranslatorChoice {
    pub fn parse(s: &str) -> Result<Self, ExperimentError> {
        match s.trim() {
            "identity" => Ok(TranslatorChoice::Identity),
            "live" => Ok(TranslatorChoice::Live),
            other => match other.strip_prefix("table:") {
                Some(path) if !path.trim().is_empty() => Ok(TranslatorChoice::Table(PathBuf::from(path.trim()))),
                _ => Err(ExperimentError::Config(format!(
                    "unknown translator `{other}` (expected identity, live or table:<tsv>)"
                ))),
            },
        }
    }
}

fn default_backend() -> String {
    "lead-baseline".into()
}

fn default_eval_split() -> SplitKind {
    SplitKind::Validation
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

fn default_noise_rate() -> f64 {
    DEFAULT_NOISE_RATE
}

fn default_threshold() -> f64 {
    DEFAULT_THRESHOLD
}

fn default_true() -> bool {
    true
}

/// One experiment, read from a flat TOML document.
///
/// ```toml
/// name = "Translation+Mapping+Lead"
/// language = "gujarati"
/// eval_path = "data/gujarati_val.csv"
/// refs_path = "data/gujarati_val_refs.csv"
/// pipeline = "translate_map"
/// translator = "table:data/gu_en.tsv"
/// output_dir = "runs"
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Approach label shown in reports.
    pub name: String,
    pub language: Language,
    pub eval_path: PathBuf,
    #[serde(default = "default_eval_split")]
    pub eval_split: SplitKind,
    /// `id,Summary` file with gold summaries, for splits that lack them.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub refs_path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train_path: Option<PathBuf>,

    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epochs: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight_decay: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub learning_rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub batch_size: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_input_tokens: Option<u32>,

    #[serde(default = "default_backend")]
    pub backend: String,

    #[serde(default)]
    pub augmentations: Vec<AugmentKind>,
    /// Append augmented copies (true) or replace the originals (false).
    #[serde(default = "default_true")]
    pub append_augmented: bool,
    #[serde(default = "default_noise_rate")]
    pub noise_rate: f64,
    #[serde(default = "default_seed")]
    pub seed: u64,

    #[serde(default)]
    pub pipeline: PipelineKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub translator: Option<String>,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub translation_cache: Option<PathBuf>,

    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_tokens: Option<u32>,
    pub output_dir: PathBuf,
}

/// Fully resolved settings of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedConfig {
    pub backend: BackendChoice,
    pub preset: Option<Preset>,
    /// Training spec; `None` when nothing is trained.
    pub spec: Option<SummarizerSpec>,
    pub generation: GenerationParams,
    pub translator: Option<TranslatorChoice>,
}

impl ExperimentConfig {
    /// A direct lead-baseline run over `eval_path` with defaults elsewhere.
    pub fn new(name: impl Into<String>, language: Language, eval_path: impl Into<PathBuf>, output_dir: impl Into<PathBuf>) -> Self {
        ExperimentConfig {
            name: name.into(),
            language,
            eval_path: eval_path.into(),
            eval_split: default_eval_split(),
            refs_path: None,
            train_path: None,
            preset: None,
            model_id: None,
            epochs: None,
            weight_decay: None,
            learning_rate: None,
            batch_size: None,
            max_input_tokens: None,
            backend: default_backend(),
            augmentations: Vec::new(),
            append_augmented: true,
            noise_rate: DEFAULT_NOISE_RATE,
            seed: DEFAULT_SEED,
            pipeline: PipelineKind::Direct,
            translator: None,
            threshold: DEFAULT_THRESHOLD,
            translation_cache: None,
            max_tokens: None,
            output_dir: output_dir.into(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, ExperimentError> {
        toml::from_str(text).map_err(|e| ExperimentError::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ExperimentError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| ExperimentError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }

    /// SHA-256 over every field.
    pub fn hash(&self) -> String {
        config_hash(self)
    }

    /// Checks field ranges and preset names and fills in defaults. File
    /// existence is checked separately by [`ExperimentConfig::check_paths`].
    pub fn resolve(&self) -> Result<ResolvedConfig, ExperimentError> {
        let cfg_err = |m: String| Err(ExperimentError::Config(m));
        if self.name.trim().is_empty() {
            return cfg_err("name is empty".into());
        }
        if !(0.0..=1.0).contains(&self.noise_rate) {
            return cfg_err(format!("noise_rate must lie in [0, 1], got {}", self.noise_rate));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return cfg_err(format!("threshold must lie in [0, 1], got {}", self.threshold));
        }
        if self.max_tokens == Some(0) {
            return cfg_err("max_tokens must be at least 1".into());
        }

        let backend = BackendChoice::parse(&self.backend)?;
        let preset = match &self.preset {
            Some(name) => Some(find_preset(name).map_err(|e| ExperimentError::Config(e.to_string()))?),
            None => None,
        };

        let spec = match (&preset, &self.model_id) {
            (_, Some(model_id)) => {
                let base = preset.as_ref().map(|p| p.spec.clone());
                let pick = |o: Option<u32>, d: Option<u32>, what: &str| {
                    o.or(d).ok_or_else(|| ExperimentError::Config(format!("inline spec needs `{what}`")))
                };
                let pickf = |o: Option<f64>, d: Option<f64>, what: &str| {
                    o.or(d).ok_or_else(|| ExperimentError::Config(format!("inline spec needs `{what}`")))
                };
                Some(SummarizerSpec {
                    model_id: model_id.clone(),
                    epochs: pick(self.epochs, base.as_ref().map(|b| b.epochs), "epochs")?,
                    weight_decay: pickf(self.weight_decay, base.as_ref().map(|b| b.weight_decay).or(Some(0.0)), "weight_decay")?,
                    learning_rate: pickf(self.learning_rate, base.as_ref().map(|b| b.learning_rate), "learning_rate")?,
                    batch_size: pick(self.batch_size, base.as_ref().map(|b| b.batch_size), "batch_size")?,
                    max_input_tokens: pick(self.max_input_tokens, base.as_ref().map(|b| b.max_input_tokens), "max_input_tokens")?,
                })
            }
            (Some(p), None) => Some(SummarizerSpec {
                epochs: self.epochs.unwrap_or(p.spec.epochs),
                weight_decay: self.weight_decay.unwrap_or(p.spec.weight_decay),
                learning_rate: self.learning_rate.unwrap_or(p.spec.learning_rate),
                batch_size: self.batch_size.unwrap_or(p.spec.batch_size),
                max_input_tokens: self.max_input_tokens.unwrap_or(p.spec.max_input_tokens),
                ..p.spec.clone()
            }),
            (None, None) => None,
        };
        if let Some(spec) = &spec {
            spec.validate().map_err(|e| ExperimentError::Config(e.to_string()))?;
        }

        let translator = match (self.pipeline, &self.translator) {
            (PipelineKind::TranslateMap, Some(t)) => Some(TranslatorChoice::parse(t)?),
            (PipelineKind::TranslateMap, None) => return cfg_err("translate_map pipeline needs `translator`".into()),
            (PipelineKind::Direct, _) => None,
        };
        if self.pipeline == PipelineKind::TranslateMap && self.language == Language::English {
            return cfg_err("translate_map needs a non-English source language".into());
        }

        let max_tokens = match (self.max_tokens, self.pipeline, &preset) {
            (Some(n), _, _) => n,
            (None, PipelineKind::TranslateMap, _) => {
                find_pipeline_preset(TRANSLATE_MAP_PRESET).expect("registered").generation.max_tokens
            }
            (None, PipelineKind::Direct, Some(p)) => p.generation.max_tokens,
            (None, PipelineKind::Direct, None) => DEFAULT_MAX_TOKENS,
        };

        if self.train_path.is_some() && spec.is_none() {
            return cfg_err("training needs `preset` or an inline spec (`model_id` ...)".into());
        }

        Ok(ResolvedConfig {
            backend,
            preset,
            spec,
            generation: GenerationParams { max_tokens, seed: self.seed },
            translator,
        })
    }

    /// Every referenced input file must exist.
    pub fn check_paths(&self) -> Result<(), ExperimentError> {
        let mut paths: Vec<&Path> = vec![&self.eval_path];
        paths.extend(self.refs_path.as_deref());
        paths.extend(self.train_path.as_deref());
        if let Some(TranslatorChoice::Table(p)) = self.translator.as_deref().map(TranslatorChoice::parse).transpose()? {
            if !p.exists() {
                return Err(ExperimentError::Config(format!("translation table {} does not exist", p.display())));
            }
        }
        for p in paths {
            if !p.exists() {
                return Err(ExperimentError::Config(format!("{} does not exist", p.display())));
            }
        }
        Ok(())
    }
}
