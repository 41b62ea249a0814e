use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sumkit::augment::add_noise;
use sumkit::backends::{self, find_preset, AdapterBackend, AdapterClient, GenerationParams, SummarizerBackend};
use sumkit::corpus::{load_csv, load_summaries, ArticleRecord, SplitKind};
use sumkit::experiments::{load_runs, run_experiment, ExperimentConfig, ExperimentError, RUN_LOG};
use sumkit::rouge::corpus_rouge;
use sumkit::Language;

const TWENTY: &str = "one two three four five six seven eight nine ten eleven twelve thirteen fourteen \
                      fifteen sixteen seventeen eighteen nineteen twenty";

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn mock_command() -> String {
    format!("{} mock-adapter", env!("CARGO_BIN_EXE_sumkit"))
}

#[test]
fn noise_matches_golden_file() {
    let record = ArticleRecord::new("n", TWENTY, Some("one.".into()));
    let golden = fs::read_to_string(data("noise_golden.tsv")).unwrap();
    let mut checked = 0;
    for line in golden.lines().filter(|l| !l.starts_with('#')) {
        let mut cols = line.split('\t');
        let rate: f64 = cols.next().unwrap().parse().unwrap();
        let seed: u64 = cols.next().unwrap().parse().unwrap();
        let expected = cols.next().unwrap();
        let out = add_noise(&record, rate, seed).unwrap();
        assert_eq!(out.article, expected, "rate {rate} seed {seed}");
        assert_eq!(out.id, "n-noise");
        assert_eq!(out.summary, record.summary);
        checked += 1;
    }
    assert_eq!(checked, 2);
}

#[test]
fn noise_follows_documented_generator() {
    // one ChaCha8 draw per token, token kept when the draw is >= rate
    let record = ArticleRecord::new("n", TWENTY, None);
    for seed in 0..50u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let kept: Vec<&str> = TWENTY.split_whitespace().filter(|_| rng.gen::<f64>() >= 0.3).collect();
        let expected = if kept.len() == 20 { TWENTY.to_string() } else { kept.join(" ") };
        assert_eq!(add_noise(&record, 0.3, seed).unwrap().article, expected, "seed {seed}");
    }
}

#[test]
fn run_aggregate_equals_recomputation() {
    let dir = tempfile::tempdir().unwrap();
    let config = ExperimentConfig::new("Lead", Language::English, data("english_50.csv"), dir.path());
    let run = run_experiment(&config).unwrap();
    assert_eq!(run.records.len(), 50);

    // recompute from the summaries file the run wrote, not from the record
    let written = load_summaries(dir.path().join("summaries").join(format!("{}.csv", &run.config_hash[..16]))).unwrap();
    let gold = load_csv(data("english_50.csv"), SplitKind::Validation, Language::English).unwrap();
    let pairs: Vec<(String, String)> = gold
        .records
        .iter()
        .map(|r| (written[&r.id].clone(), r.summary.clone().unwrap()))
        .collect();
    let fresh = corpus_rouge(&pairs, &[1, 2, 4]).unwrap();
    for n in [1, 2, 4] {
        assert!((fresh[&n].f1 - run.aggregate[&n].f1).abs() <= 1e-12, "ROUGE-{n}");
    }
    let per_record_mean: f64 = run.records.iter().map(|r| r.scores[0].f1).sum::<f64>() / 50.0;
    assert!((per_record_mean - run.aggregate[&1].f1).abs() <= 1e-12);
}

#[test]
fn run_log_is_append_only_and_checked_on_load() {
    let dir = tempfile::tempdir().unwrap();
    let config = ExperimentConfig::new("Lead", Language::English, data("english_50.csv"), dir.path());
    run_experiment(&config).unwrap();
    let log = dir.path().join(RUN_LOG);
    let first = fs::read_to_string(&log).unwrap();
    run_experiment(&ExperimentConfig { max_tokens: Some(10), ..config }).unwrap();
    let both = fs::read_to_string(&log).unwrap();
    assert!(both.starts_with(&first));
    assert_eq!(load_runs(&log).unwrap().len(), 2);

    // a tampered aggregate no longer matches its records
    let mut run: serde_json::Value = serde_json::from_str(first.trim()).unwrap();
    run["aggregate"]["1"]["f1"] = serde_json::json!(0.99);
    let bad = dir.path().join("bad.jsonl");
    fs::write(&bad, format!("{run}\n")).unwrap();
    assert!(matches!(load_runs(&bad), Err(ExperimentError::Inconsistent { .. })));
}

#[test]
fn config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let base = ExperimentConfig::new("x", Language::English, data("english_50.csv"), dir.path());
    let unknown = ExperimentConfig { preset: Some("english-gpt".into()), ..base.clone() };
    assert!(matches!(run_experiment(&unknown), Err(ExperimentError::Config(_))));
    let missing = ExperimentConfig { eval_path: dir.path().join("nope.csv"), ..base };
    assert!(matches!(run_experiment(&missing), Err(ExperimentError::Config(_))));
    assert!(!dir.path().join(RUN_LOG).exists());
}

#[test]
fn missing_reference_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let config = ExperimentConfig {
        eval_split: SplitKind::Test,
        ..ExperimentConfig::new("x", Language::English, data("english_50_no_summary.csv"), dir.path())
    };
    assert!(matches!(run_experiment(&config), Err(ExperimentError::MissingReference(_))));

    let refs = ExperimentConfig { refs_path: Some(data("english_50.csv")), ..config };
    assert_eq!(run_experiment(&refs).unwrap().records.len(), 50);
}

#[test]
fn mock_adapter_over_child_process() {
    let client = Arc::new(AdapterClient::spawn(&mock_command()).unwrap());
    let preset = find_preset("english-pegasus").unwrap();
    let backend = AdapterBackend::connect(Arc::clone(&client), &preset.spec.model_id, Language::English).unwrap();
    assert_eq!(backend.name(), "mock-adapter");

    let train = load_csv(data("english_50.csv"), SplitKind::Train, Language::English).unwrap();
    let handle = backends::fine_tune(&backend, &train, &preset.spec).unwrap();
    assert!(handle.checkpoint.as_deref().unwrap().starts_with("mock-"));
    assert_eq!(handle.spec_hash.as_deref(), Some(backends::config_hash(&preset.spec).as_str()));

    let article = &train.records[0].article;
    let params = GenerationParams::new(12);
    let a = backends::summarize(&backend, &handle, article, &params).unwrap();
    let b = backends::summarize(&backend, &handle, article, &params).unwrap();
    assert_eq!(a, b);
    assert_eq!(a, backends::lead_baseline(article, &params, Language::English).unwrap());
}

#[test]
fn experiment_trains_through_adapter() {
    let dir = tempfile::tempdir().unwrap();
    let config = ExperimentConfig {
        preset: Some("english-pegasus".into()),
        backend: format!("adapter:{}", mock_command()),
        train_path: Some(data("english_50.csv")),
        augmentations: vec![backends::AugmentKind::RightShift, backends::AugmentKind::Noise],
        ..ExperimentConfig::new("PEGASUS", Language::English, data("english_50.csv"), dir.path())
    };
    let a = run_experiment(&config).unwrap();
    let b = run_experiment(&config).unwrap();
    assert_eq!(a.backend.name, "mock-adapter");
    assert_eq!(a.backend.generation.max_tokens, 65);
    assert!(a.backend.handle.checkpoint.is_some());
    assert_eq!(a.backend.adapter_defaults["decoding"], "lead");
    assert!(a.same_outcome(&b));
}

#[test]
fn translate_map_with_table_translator() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("gu.csv");
    fs::write(
        &csv_path,
        "id,Article,Summary\n\
         g1,\"ખેડૂતો માટે નવી યોજના. વરસાદ પડ્યો. બજાર બંધ રહ્યું.\",ખેડૂતો માટે નવી યોજના.\n",
    )
    .unwrap();
    let table = dir.path().join("gu_en.tsv");
    fs::write(
        &table,
        "ખેડૂતો માટે નવી યોજના.\tNew scheme for farmers.\nવરસાદ પડ્યો.\tIt rained.\nબજાર બંધ રહ્યું.\tThe market stayed closed.\n",
    )
    .unwrap();
    let config = ExperimentConfig {
        pipeline: sumkit::experiments::PipelineKind::TranslateMap,
        translator: Some(format!("table:{}", table.display())),
        max_tokens: Some(4),
        translation_cache: Some(dir.path().join("cache.jsonl")),
        ..ExperimentConfig::new("Translate+Map", Language::Gujarati, &csv_path, dir.path().join("out"))
    };
    let run = run_experiment(&config).unwrap();
    assert_eq!(run.records[0].summary, "ખેડૂતો માટે નવી યોજના.");
    assert_eq!(run.aggregate[&1].f1, 1.0);
    assert_eq!(run.backend.translator.as_deref(), Some("table"));
    let cached = fs::read_to_string(dir.path().join("cache.jsonl")).unwrap();
    assert_eq!(cached.lines().count(), 3);
}

#[test]
fn summaries_keyed_by_id() {
    let dir = tempfile::tempdir().unwrap();
    let config = ExperimentConfig::new("Lead", Language::English, data("english_50.csv"), dir.path());
    let run = run_experiment(&config).unwrap();
    let by_id: HashMap<_, _> = run.records.iter().map(|r| (r.id.as_str(), r)).collect();
    assert_eq!(by_id.len(), 50);
    assert!(by_id.contains_key("en-000"));
}
