use std::collections::HashMap;
use std::fs::File;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};

use sumkit::backends::adapter::{serve, MockAdapter};
use sumkit::backends::{self, find_preset, AugmentKind, GenerationParams, ModelHandle, Preset, PresetRole};
use sumkit::corpus::{self, clean_text, corpus_stats, load_csv, load_summaries, save_csv, CleanOptions, DatasetSplit, SplitKind};
use sumkit::crosslingual::{pipeline_summarize, TranslationCache, TranslationClient, DEFAULT_THRESHOLD};
use sumkit::experiments::{
    augment_split, build_backend, build_translator, evaluate_summaries, load_runs, render_report, run_experiment,
    BackendChoice, ExperimentConfig, DEFAULT_NOISE_RATE, ReportFormat, TranslatorChoice, TRANSLATE_MAP_PRESET,
};
use sumkit::extractive::{
    score_sentences, select_summary, AdapterScorer, HeadingOverlapScorer, SentenceScorer, DEFAULT_MIN_CHARS,
    DEFAULT_TOP_K,
};
use sumkit::rouge::RougeScore;
use sumkit::segment::split_sentences;
use sumkit::Language;

#[derive(Parser)]
#[command(name = "sumkit", version, about = "Multilingual news summarization experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum CleanLevel {
    None,
    Matching,
    Aggressive,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a split, print statistics and optionally write a cleaned copy.
    Prepare {
        csv: PathBuf,
        #[arg(long)]
        lang: Language,
        #[arg(long, default_value = "train")]
        split: SplitKind,
        #[arg(long, value_enum, default_value = "none")]
        clean: CleanLevel,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write an augmented training split.
    Augment {
        csv: PathBuf,
        #[arg(long)]
        lang: Language,
        #[arg(long)]
        right_shift: bool,
        /// Token dropout rate; noise is applied only when given.
        #[arg(long)]
        noise_rate: Option<f64>,
        #[arg(long, default_value_t = backends::DEFAULT_SEED)]
        seed: u64,
        /// Replace the originals instead of appending copies.
        #[arg(long)]
        replace: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fine-tune a preset through an adapter and print the model handle.
    Train {
        #[arg(long)]
        preset: String,
        #[arg(long)]
        data: PathBuf,
        /// adapter:<command> or socket:<path>
        #[arg(long)]
        backend: String,
    },
    /// Summarize every record of a split into an `id,Summary` file.
    Summarize {
        csv: PathBuf,
        #[arg(long)]
        preset: Option<String>,
        #[arg(long)]
        lang: Option<Language>,
        #[arg(long)]
        max_tokens: Option<u32>,
        #[arg(long, default_value = "lead-baseline")]
        backend: String,
        /// Checkpoint reported by `train`.
        #[arg(long)]
        checkpoint: Option<String>,
        #[arg(long, default_value_t = backends::DEFAULT_SEED)]
        seed: u64,
        #[arg(long, default_value = "test")]
        split: SplitKind,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Translate to English, summarize, map back to source sentences.
    TranslateMap {
        csv: PathBuf,
        #[arg(long, default_value = "gujarati")]
        lang: Language,
        /// identity, live or table:<tsv>
        #[arg(long)]
        translator: String,
        #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
        threshold: f64,
        #[arg(long)]
        max_tokens: Option<u32>,
        #[arg(long)]
        cache: Option<PathBuf>,
        #[arg(long, default_value = "lead-baseline")]
        backend: String,
        #[arg(long)]
        model_id: Option<String>,
        #[arg(long, default_value_t = backends::DEFAULT_SEED)]
        seed: u64,
        #[arg(long, default_value = "test")]
        split: SplitKind,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score an `id,Summary` file against references.
    Evaluate {
        candidates: PathBuf,
        /// Any CSV with `id` and `Summary` columns.
        #[arg(long)]
        refs: PathBuf,
        /// Also write per-record scores here.
        #[arg(long)]
        per_record: Option<PathBuf>,
    },
    /// Render runs from a run log.
    Report {
        runs: PathBuf,
        #[arg(long, default_value = "table")]
        format: ReportFormat,
    },
    /// Run an experiment described by a TOML config.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Serve the deterministic mock adapter on stdin/stdout.
    #[command(hide = true)]
    MockAdapter,
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = dispatch(cli.command) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Prepare { csv, lang, split, clean, out } => prepare(&csv, lang, split, clean, out.as_deref()),
        Command::Augment { csv, lang, right_shift, noise_rate, seed, replace, out } => {
            let mut steps = Vec::new();
            if right_shift {
                steps.push(AugmentKind::RightShift);
            }
            if noise_rate.is_some() {
                steps.push(AugmentKind::Noise);
            }
            if steps.is_empty() {
                bail!("nothing to do: pass --right-shift and/or --noise-rate");
            }
            let split = load_csv(&csv, SplitKind::Train, lang)?;
            let augmented = augment_split(&split, &steps, noise_rate.unwrap_or(0.0), seed, !replace)?;
            save_csv(&out, &augmented)?;
            eprintln!("wrote {} records to {}", augmented.len(), out.display());
            Ok(())
        }
        Command::Train { preset, data, backend } => train(&preset, &data, &backend),
        Command::Summarize { csv, preset, lang, max_tokens, backend, checkpoint, seed, split, out } => {
            let preset = preset.as_deref().map(find_preset).transpose()?;
            let lang = match (&preset, lang) {
                (Some(p), Some(l)) if p.language != l => bail!("preset `{}` is for {}, not {l}", p.name, p.language),
                (Some(p), _) => p.language,
                (None, Some(l)) => l,
                (None, None) => bail!("pass --preset or --lang"),
            };
            let max_tokens = max_tokens
                .or(preset.as_ref().map(|p| p.generation.max_tokens))
                .unwrap_or(backends::DEFAULT_MAX_TOKENS);
            let data = load_csv(&csv, split, lang)?;
            let params = GenerationParams { max_tokens, seed };
            let rows = summarize(&data, preset.as_ref(), &backend, checkpoint, &params)?;
            write_rows(out.as_deref(), &rows)
        }
        Command::TranslateMap { csv, lang, translator, threshold, max_tokens, cache, backend, model_id, seed, split, out } => {
            if lang == Language::English {
                bail!("translate-map needs a non-English source language");
            }
            let pipeline = backends::find_pipeline_preset(TRANSLATE_MAP_PRESET)?;
            let max_tokens = max_tokens.unwrap_or(pipeline.generation.max_tokens);
            let model_id = model_id.or_else(|| find_preset(&pipeline.backend_preset).ok().map(|p| p.spec.model_id));
            let loaded = build_backend(&BackendChoice::parse(&backend)?, model_id.as_deref(), Language::English)?;
            let handle = base_handle(loaded.backend.as_ref(), model_id.as_deref(), None);
            let mut client = TranslationClient::new(build_translator(&TranslatorChoice::parse(&translator)?)?, lang, Language::English);
            if let Some(path) = cache {
                client = client.with_cache(TranslationCache::open(path)?);
            }
            let data = load_csv(&csv, split, lang)?;
            let params = GenerationParams { max_tokens, seed };
            let mut rows = Vec::with_capacity(data.len());
            for r in &data.records {
                let summary = pipeline_summarize(&r.article, &client, loaded.backend.as_ref(), &handle, &params, threshold)
                    .with_context(|| format!("record `{}`", r.id))?;
                rows.push((r.id.clone(), summary));
            }
            write_rows(out.as_deref(), &rows)
        }
        Command::Evaluate { candidates, refs, per_record } => evaluate(&candidates, &refs, per_record.as_deref()),
        Command::Report { runs, format } => {
            let runs = load_runs(&runs)?;
            print!("{}", render_report(&runs, format)?);
            Ok(())
        }
        Command::Run { config } => {
            let config = ExperimentConfig::load(&config)?;
            let run = run_experiment(&config)?;
            println!("config hash: {}", run.config_hash);
            print!("{}", render_report(std::slice::from_ref(&run), ReportFormat::Table)?);
            Ok(())
        }
        Command::MockAdapter => {
            let stdin = io::stdin();
            serve(stdin.lock(), io::stdout().lock(), &mut MockAdapter::default())?;
            Ok(())
        }
    }
}

fn prepare(csv: &Path, lang: Language, split: SplitKind, clean: CleanLevel, out: Option<&Path>) -> Result<()> {
    let mut data = load_csv(csv, split, lang)?;
    let stats = corpus_stats(&data)?;
    println!("{}", serde_json::to_string_pretty(&stats)?);
    if let Some(out) = out {
        let opts = match clean {
            CleanLevel::None => CleanOptions::default(),
            CleanLevel::Matching => CleanOptions::matching(),
            CleanLevel::Aggressive => CleanOptions::aggressive(lang),
        };
        for r in &mut data.records {
            r.heading = clean_text(&r.heading, &opts);
            r.article = clean_text(&r.article, &opts);
            r.summary = r.summary.as_deref().map(|s| clean_text(s, &opts));
        }
        save_csv(out, &data)?;
        eprintln!("wrote {} records to {}", data.len(), out.display());
    }
    Ok(())
}

fn base_handle(backend: &dyn backends::SummarizerBackend, model_id: Option<&str>, checkpoint: Option<String>) -> ModelHandle {
    let mut handle = backend.base_handle();
    if let Some(id) = model_id {
        handle.model_id = id.to_string();
    }
    handle.checkpoint = checkpoint;
    handle
}

fn train(preset: &str, data: &Path, backend: &str) -> Result<()> {
    let preset = find_preset(preset)?;
    let choice = BackendChoice::parse(backend)?;
    if choice == BackendChoice::LeadBaseline {
        bail!("the lead baseline cannot be trained; pass --backend adapter:<command> or socket:<path>");
    }
    let loaded = build_backend(&choice, Some(&preset.spec.model_id), preset.language)?;
    let split = load_csv(data, SplitKind::Train, preset.language)?;
    let split = augment_split(&split, &preset.augment, DEFAULT_NOISE_RATE, backends::DEFAULT_SEED, true)?;
    let handle = backends::fine_tune(loaded.backend.as_ref(), &split, &preset.spec)?;
    println!("{}", serde_json::to_string_pretty(&handle)?);
    Ok(())
}

fn summarize(
    data: &DatasetSplit,
    preset: Option<&Preset>,
    backend: &str,
    checkpoint: Option<String>,
    params: &GenerationParams,
) -> Result<Vec<(String, String)>> {
    let choice = BackendChoice::parse(backend)?;
    let model_id = preset.map(|p| p.spec.model_id.as_str());
    let mut rows = Vec::with_capacity(data.len());

    if preset.is_some_and(|p| p.role == PresetRole::Extractive) {
        let adapter = match &choice {
            BackendChoice::LeadBaseline => None,
            BackendChoice::Process(cmd) => Some(backends::AdapterClient::spawn(cmd)?),
            BackendChoice::Socket(path) => Some(backends::AdapterClient::connect(path)?),
        };
        let adapter = adapter.map(Arc::new);
        for r in &data.records {
            let sentences = split_sentences(&r.article, data.language);
            let scorer: Box<dyn SentenceScorer> = match &adapter {
                Some(client) => {
                    let handle = ModelHandle {
                        backend: "adapter".into(),
                        model_id: model_id.unwrap_or_default().to_string(),
                        checkpoint: checkpoint.clone(),
                        spec_hash: None,
                    };
                    Box::new(AdapterScorer::new(Arc::clone(client), handle))
                }
                None => Box::new(HeadingOverlapScorer::new(&r.heading)),
            };
            let scored = score_sentences(scorer.as_ref(), &sentences).with_context(|| format!("record `{}`", r.id))?;
            rows.push((r.id.clone(), select_summary(&scored, DEFAULT_TOP_K, DEFAULT_MIN_CHARS)));
        }
        return Ok(rows);
    }

    let loaded = build_backend(&choice, model_id, data.language)?;
    let handle = base_handle(loaded.backend.as_ref(), model_id, checkpoint);
    for r in &data.records {
        let summary = backends::summarize(loaded.backend.as_ref(), &handle, &r.article, params)
            .with_context(|| format!("record `{}`", r.id))?;
        rows.push((r.id.clone(), summary));
    }
    Ok(rows)
}

fn write_rows(out: Option<&Path>, rows: &[(String, String)]) -> Result<()> {
    match out {
        Some(path) => {
            corpus::write_summaries(File::create(path).with_context(|| format!("creating {}", path.display()))?, rows)?;
            eprintln!("wrote {} summaries to {}", rows.len(), path.display());
        }
        None => corpus::write_summaries(io::stdout().lock(), rows)?,
    }
    Ok(())
}

/// Ids in file order, for stable output.
fn ids_in_order(path: &Path) -> Result<Vec<String>> {
    let mut rdr = csv::Reader::from_reader(BufReader::new(File::open(path)?));
    let col = rdr
        .headers()?
        .iter()
        .position(|h| h.trim_start_matches('\u{feff}') == corpus::COL_ID)
        .ok_or_else(|| anyhow!("{} has no `id` column", path.display()))?;
    let mut ids = Vec::new();
    for row in rdr.records() {
        ids.push(row?.get(col).unwrap_or_default().trim().to_string());
    }
    Ok(ids)
}

fn evaluate(candidates: &Path, refs: &Path, per_record: Option<&Path>) -> Result<()> {
    let cands: HashMap<String, String> = load_summaries(candidates)?;
    let references = load_summaries(refs)?;
    let ids = ids_in_order(refs)?;
    let (results, aggregate) = evaluate_summaries(&ids, &cands, &references)?;
    let mut out = io::stdout().lock();
    writeln!(out, "records: {}", results.len())?;
    for (n, s) in &aggregate {
        let RougeScore { precision, recall, f1, .. } = s;
        writeln!(out, "ROUGE-{n}  P {precision:.4}  R {recall:.4}  F1 {f1:.4}")?;
    }
    if let Some(path) = per_record {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["id", "ROUGE-1", "ROUGE-2", "ROUGE-4"])?;
        for r in &results {
            let mut row = vec![r.id.clone()];
            row.extend(r.scores.iter().map(|s| format!("{:.4}", s.f1)));
            w.write_record(&row)?;
        }
        w.flush()?;
    }
    Ok(())
}
