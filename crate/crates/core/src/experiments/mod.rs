//! Config-driven experiment runs, the run log and reports.
//!
//! A run loads the evaluation split, optionally augments a training split
//! and fine-tunes, summarizes every record (directly or through the
//! translate-map pipeline), scores it with ROUGE-1/2/4 and appends a
//! [`RunRecord`] to `<output_dir>/runs.jsonl`.

use std::collections::{BTreeMap, HashMap};
use std::fs::{self, File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::augment::{add_noise, right_shift, AugmentError};
use crate::backends::{
    self, AdapterBackend, AdapterClient, AugmentKind, BackendError, GenerationParams, LeadBaseline, ModelHandle,
    SummarizerBackend,
};
use crate::corpus::{self, load_csv, load_summaries, CorpusError, DatasetSplit, SplitKind};
use crate::crosslingual::{
    pipeline_summarize, CrossLingualError, IdentityTranslator, LiveTranslator, TableTranslator, TranslationCache,
    TranslationClient, Translator,
};
use crate::rouge::{corpus_rouge, rouge_n, RougeError, RougeScore, REPORTED_ORDERS};
use crate::Language;

mod config;
mod report;

pub use config::{BackendChoice, DEFAULT_NOISE_RATE, ExperimentConfig, PipelineKind, ResolvedConfig, TranslatorChoice, TRANSLATE_MAP_PRESET};
pub use report::{render_report, ReportFormat};

pub const RUN_LOG: &str = "runs.jsonl";
const LOCK_FILE: &str = ".lock";
/// Largest allowed gap between stored and recomputed scores.
pub const CONSISTENCY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Augment(#[from] AugmentError),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    CrossLingual(#[from] CrossLingualError),
    #[error(transparent)]
    Rouge(#[from] RougeError),
    #[error("record `{id}`: {source}")]
    Record { id: String, source: Box<ExperimentError> },
    #[error("record `{0}` has no reference summary")]
    MissingReference(String),
    #[error("no candidate summary for record `{0}`")]
    MissingCandidate(String),
    #[error("{} is locked by another run (remove {} if stale)", .0.display(), LOCK_FILE)]
    Locked(PathBuf),
    #[error("run log line {line}: {message}")]
    RunLog { line: usize, message: String },
    #[error("run {hash}: stored scores disagree with recomputation ({detail})")]
    Inconsistent { hash: String, detail: String },
    #[error("no runs to report")]
    EmptyReport,
}

impl ExperimentError {
    fn for_record(id: &str, e: impl Into<ExperimentError>) -> Self {
        ExperimentError::Record { id: id.to_string(), source: Box::new(e.into()) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordResult {
    pub id: String,
    pub summary: String,
    pub reference: String,
    /// One score per reported order, ascending in n.
    pub scores: Vec<RougeScore>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendInfo {
    pub name: String,
    pub handle: ModelHandle,
    pub generation: GenerationParams,
    /// Adapter-reported decoding defaults, if any.
    #[serde(default)]
    pub adapter_defaults: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub translator: Option<String>,
}

/// One line of the run log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub label: String,
    pub config_hash: String,
    pub config: ExperimentConfig,
    pub timestamp: String,
    pub backend: BackendInfo,
    pub records: Vec<RecordResult>,
    /// Macro averages keyed by n-gram order.
    pub aggregate: BTreeMap<usize, RougeScore>,
}

impl RunRecord {
    /// Equal apart from the timestamp.
    pub fn same_outcome(&self, other: &RunRecord) -> bool {
        RunRecord { timestamp: String::new(), ..self.clone() } == RunRecord { timestamp: String::new(), ..other.clone() }
    }

    pub fn f1(&self, n: usize) -> Option<f64> {
        self.aggregate.get(&n).map(|s| s.f1)
    }

    /// Recomputes per-record and aggregate scores from the stored
    /// summaries and references.
    pub fn verify(&self) -> Result<(), ExperimentError> {
        let inconsistent = |detail: String| ExperimentError::Inconsistent { hash: self.config_hash.clone(), detail };
        if self.records.is_empty() {
            return Err(inconsistent("run has no records".into()));
        }
        let ns: Vec<usize> = self.aggregate.keys().copied().collect();
        let pairs: Vec<(&str, &str)> =
            self.records.iter().map(|r| (r.summary.as_str(), r.reference.as_str())).collect();
        let recomputed = corpus_rouge(&pairs, &ns)?;
        for (n, stored) in &self.aggregate {
            let fresh = &recomputed[n];
            let gaps = [
                (stored.precision - fresh.precision).abs(),
                (stored.recall - fresh.recall).abs(),
                (stored.f1 - fresh.f1).abs(),
            ];
            if gaps.iter().any(|g| g.is_nan() || *g > CONSISTENCY_TOLERANCE) {
                return Err(inconsistent(format!("ROUGE-{n} aggregate")));
            }
        }
        for r in &self.records {
            for s in &r.scores {
                let fresh = rouge_n(&r.summary, &r.reference, s.n)?;
                if (fresh.f1 - s.f1).abs() > CONSISTENCY_TOLERANCE {
                    return Err(inconsistent(format!("record {} ROUGE-{}", r.id, s.n)));
                }
            }
        }
        Ok(())
    }
}

/// Holds `<dir>/.lock` for the lifetime of a run.
struct DirLock {
    path: PathBuf,
}

impl DirLock {
    fn acquire(dir: &Path) -> Result<Self, ExperimentError> {
        let path = dir.join(LOCK_FILE);
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(mut f) => {
                let _ = writeln!(f, "{}", std::process::id());
                Ok(DirLock { path })
            }
            Err(e) if e.kind() == io::ErrorKind::AlreadyExists => Err(ExperimentError::Locked(dir.to_path_buf())),
            Err(e) => Err(e.into()),
        }
    }
}

impl Drop for DirLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

/// Applies augmentations in order. Each step sees the output of the
/// previous one; copies are appended unless `append` is false.
pub fn augment_split(
    split: &DatasetSplit,
    steps: &[AugmentKind],
    noise_rate: f64,
    seed: u64,
    append: bool,
) -> Result<DatasetSplit, AugmentError> {
    let mut records = split.records.clone();
    for step in steps {
        let mut derived = Vec::with_capacity(records.len());
        for (i, r) in records.iter().enumerate() {
            derived.push(match step {
                AugmentKind::RightShift => right_shift(r, split.language),
                // one stream per record so the output does not depend on order
                AugmentKind::Noise => add_noise(r, noise_rate, seed.wrapping_add(i as u64))?,
            });
        }
        if append {
            records.extend(derived);
        } else {
            records = derived;
        }
    }
    Ok(DatasetSplit { records, ..split.clone() })
}

pub fn build_translator(choice: &TranslatorChoice) -> Result<Box<dyn Translator>, ExperimentError> {
    Ok(match choice {
        TranslatorChoice::Identity => Box::new(IdentityTranslator),
        TranslatorChoice::Table(path) => Box::new(TableTranslator::from_tsv(path)?),
        TranslatorChoice::Live => Box::new(LiveTranslator::from_env()?),
    })
}

/// A backend plus whatever metadata the run record needs.
pub struct LoadedBackend {
    pub backend: Box<dyn SummarizerBackend>,
    pub adapter_defaults: Value,
}

/// Instantiates the configured backend for generating in `language`.
pub fn build_backend(choice: &BackendChoice, model_id: Option<&str>, language: Language) -> Result<LoadedBackend, ExperimentError> {
    let adapter = |client: AdapterClient| -> Result<LoadedBackend, ExperimentError> {
        let model_id = model_id.ok_or_else(|| ExperimentError::Config("adapter backends need a preset or model_id".into()))?;
        let backend = AdapterBackend::connect(Arc::new(client), model_id, language)?;
        let adapter_defaults = backend.defaults().clone();
        Ok(LoadedBackend { backend: Box::new(backend), adapter_defaults })
    };
    match choice {
        BackendChoice::LeadBaseline => Ok(LoadedBackend {
            backend: Box::new(LeadBaseline::new(language)),
            adapter_defaults: Value::Null,
        }),
        BackendChoice::Process(cmd) => adapter(AdapterClient::spawn(cmd)?),
        #[cfg(unix)]
        BackendChoice::Socket(path) => adapter(AdapterClient::connect(path)?),
        #[cfg(not(unix))]
        BackendChoice::Socket(_) => Err(ExperimentError::Config("socket adapters need a Unix platform".into())),
    }
}

/// Pairs every evaluation record with its reference summary.
fn references(config: &ExperimentConfig, split: &DatasetSplit) -> Result<Vec<String>, ExperimentError> {
    let external: HashMap<String, String> = match &config.refs_path {
        Some(p) => load_summaries(p)?,
        None => HashMap::new(),
    };
    split
        .records
        .iter()
        .map(|r| {
            external
                .get(&r.id)
                .cloned()
                .or_else(|| r.summary.clone())
                .ok_or_else(|| ExperimentError::MissingReference(r.id.clone()))
        })
        .collect()
}

/// Runs one experiment end to end and appends its record to the run log.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunRecord, ExperimentError> {
    let resolved = config.resolve()?;
    config.check_paths()?;
    fs::create_dir_all(&config.output_dir)?;
    let _lock = DirLock::acquire(&config.output_dir)?;

    let eval = load_csv(&config.eval_path, config.eval_split, config.language)?;
    let refs = references(config, &eval)?;

    let generation_language = match config.pipeline {
        PipelineKind::Direct => config.language,
        PipelineKind::TranslateMap => Language::English,
    };
    let model_id = resolved.spec.as_ref().map(|s| s.model_id.as_str());
    let loaded = build_backend(&resolved.backend, model_id, generation_language)?;
    let backend = loaded.backend.as_ref();

    let handle = match (&config.train_path, &resolved.spec) {
        (Some(path), Some(spec)) => {
            let train = load_csv(path, SplitKind::Train, config.language)?;
            let train = augment_split(&train, &config.augmentations, config.noise_rate, config.seed, config.append_augmented)?;
            backends::fine_tune(backend, &train, spec)?
        }
        (_, Some(spec)) => ModelHandle { model_id: spec.model_id.clone(), ..backend.base_handle() },
        (_, None) => backend.base_handle(),
    };

    let client = match &resolved.translator {
        Some(choice) => {
            let mut client = TranslationClient::new(build_translator(choice)?, config.language, Language::English);
            if let Some(path) = &config.translation_cache {
                client = client.with_cache(TranslationCache::open(path)?);
            }
            Some(client)
        }
        None => None,
    };

    let params = resolved.generation;
    let mut results = Vec::with_capacity(eval.len());
    for (record, reference) in eval.records.iter().zip(refs) {
        let summary = match &client {
            None => backends::summarize(backend, &handle, &record.article, &params)
                .map_err(|e| ExperimentError::for_record(&record.id, e))?,
            Some(client) => pipeline_summarize(&record.article, client, backend, &handle, &params, config.threshold)
                .map_err(|e| ExperimentError::for_record(&record.id, e))?,
        };
        let scores = REPORTED_ORDERS
            .iter()
            .map(|&n| rouge_n(&summary, &reference, n))
            .collect::<Result<Vec<_>, _>>()?;
        results.push(RecordResult { id: record.id.clone(), summary, reference, scores });
    }

    let pairs: Vec<(&str, &str)> = results.iter().map(|r| (r.summary.as_str(), r.reference.as_str())).collect();
    let aggregate = corpus_rouge(&pairs, &REPORTED_ORDERS)?;

    let run = RunRecord {
        label: config.name.clone(),
        config_hash: config.hash(),
        config: config.clone(),
        timestamp: chrono::Utc::now().to_rfc3339(),
        backend: BackendInfo {
            name: backend.name().to_string(),
            handle,
            generation: params,
            adapter_defaults: loaded.adapter_defaults,
            translator: client.as_ref().map(|c| c.translator_name().to_string()),
        },
        records: results,
        aggregate,
    };

    let summaries_dir = config.output_dir.join("summaries");
    fs::create_dir_all(&summaries_dir)?;
    let rows: Vec<(String, String)> = run.records.iter().map(|r| (r.id.clone(), r.summary.clone())).collect();
    corpus::write_summaries(File::create(summaries_dir.join(format!("{}.csv", &run.config_hash[..16])))?, &rows)?;
    append_run(&config.output_dir.join(RUN_LOG), &run)?;
    Ok(run)
}

/// Appends one record to a run log, creating the file if needed.
pub fn append_run(path: &Path, run: &RunRecord) -> Result<(), ExperimentError> {
    let mut line = serde_json::to_string(run).map_err(|e| ExperimentError::Config(e.to_string()))?;
    line.push('\n');
    let mut f = OpenOptions::new().create(true).append(true).open(path)?;
    f.write_all(line.as_bytes())?;
    f.flush()?;
    Ok(())
}

/// Reads a run log and verifies every record against its stored data.
pub fn load_runs(path: impl AsRef<Path>) -> Result<Vec<RunRecord>, ExperimentError> {
    let mut runs = Vec::new();
    for (i, line) in BufReader::new(File::open(path)?).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let run: RunRecord = serde_json::from_str(&line)
            .map_err(|e| ExperimentError::RunLog { line: i + 1, message: e.to_string() })?;
        run.verify()?;
        runs.push(run);
    }
    Ok(runs)
}

/// Scores candidate summaries against references, both keyed by id.
/// Every reference needs a candidate; results follow `ids` order.
pub fn evaluate_summaries(
    ids: &[String],
    candidates: &HashMap<String, String>,
    references: &HashMap<String, String>,
) -> Result<(Vec<RecordResult>, BTreeMap<usize, RougeScore>), ExperimentError> {
    let mut results = Vec::with_capacity(ids.len());
    for id in ids {
        let reference = references.get(id).ok_or_else(|| ExperimentError::MissingReference(id.clone()))?;
        let summary = candidates.get(id).ok_or_else(|| ExperimentError::MissingCandidate(id.clone()))?;
        let scores = REPORTED_ORDERS
            .iter()
            .map(|&n| rouge_n(summary, reference, n))
            .collect::<Result<Vec<_>, _>>()?;
        results.push(RecordResult { id: id.clone(), summary: summary.clone(), reference: reference.clone(), scores });
    }
    let pairs: Vec<(&str, &str)> = results.iter().map(|r| (r.summary.as_str(), r.reference.as_str())).collect();
    let aggregate = corpus_rouge(&pairs, &REPORTED_ORDERS)?;
    Ok((results, aggregate))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::ArticleRecord;

    #[test]
    fn augmentation_appends_in_order() {
        let split = DatasetSplit {
            kind: SplitKind::Train,
            language: Language::English,
            records: vec![ArticleRecord::new("a", "One. Two. Three.", Some("One.".into()))],
        };
        let out = augment_split(&split, &[AugmentKind::RightShift, AugmentKind::Noise], 0.0, 13, true).unwrap();
        let ids: Vec<_> = out.records.iter().map(|r| r.id.as_str()).collect();
        assert_eq!(ids, ["a", "a-rs", "a-noise", "a-rs-noise"]);
        assert_eq!(out.records[1].article, "Three. One. Two.");

        let replaced = augment_split(&split, &[AugmentKind::RightShift], 0.0, 13, false).unwrap();
        assert_eq!(replaced.records.len(), 1);
        assert_eq!(replaced.records[0].id, "a-rs");
    }

    #[test]
    fn lock_is_exclusive() {
        let dir = tempfile::tempdir().unwrap();
        let first = DirLock::acquire(dir.path()).unwrap();
        assert!(matches!(DirLock::acquire(dir.path()), Err(ExperimentError::Locked(_))));
        drop(first);
        DirLock::acquire(dir.path()).unwrap();
    }

    #[test]
    fn evaluate_needs_candidates() {
        let ids = vec!["a".to_string()];
        let refs = HashMap::from([("a".to_string(), "the cat sat".to_string())]);
        let cands = HashMap::new();
        assert!(matches!(evaluate_summaries(&ids, &cands, &refs), Err(ExperimentError::MissingCandidate(_))));
        let cands = HashMap::from([("a".to_string(), "the cat slept".to_string())]);
        let (_, agg) = evaluate_summaries(&ids, &cands, &refs).unwrap();
        assert!((agg[&1].f1 - 2.0 / 3.0).abs() < 1e-12);
        assert!((agg[&2].f1 - 0.5).abs() < 1e-12);
    }
}
