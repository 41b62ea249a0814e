//! Acceptance suite. Prints one PASS/FAIL/SKIP line per criterion and exits
//! nonzero if any required criterion fails.

use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sumkit::augment::{add_noise, right_shift};
use sumkit::backends::{GenerationParams, LeadBaseline, SummarizerBackend};
use sumkit::corpus::{load_csv, read_csv, write_csv, ArticleRecord, CorpusError, SplitKind};
use sumkit::crosslingual::{
    back_map, pipeline_summarize, CrossLingualError, IdentityTranslator, SentenceMapping, TranslationClient,
};
use sumkit::experiments::{load_runs, run_experiment, ExperimentConfig, PipelineKind, RUN_LOG};
use sumkit::extractive::{select_summary, ScoredSentence};
use sumkit::rouge::{rouge_n, rouge_n_tokens};
use sumkit::segment::split_sentences;
use sumkit::Language;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);
type Transform = (&'static str, fn(f64) -> f64);

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: Duration, what: &str) -> Result<(), String> {
    ensure(elapsed < limit, || format!("{what} took {elapsed:?}, limit {limit:?}"))
}

// ---------------------------------------------------------------------------
// ROUGE

/// Clipped n-gram overlap by exhaustive scanning, no hashing.
fn oracle_rouge(cand: &[String], refr: &[String], n: usize) -> (f64, f64, f64) {
    let grams = |t: &[String]| -> Vec<Vec<String>> {
        if t.len() < n {
            return Vec::new();
        }
        (0..=t.len() - n).map(|i| t[i..i + n].to_vec()).collect()
    };
    let (c, r) = (grams(cand), grams(refr));
    let mut seen: Vec<&Vec<String>> = Vec::new();
    let mut overlap = 0usize;
    for g in &c {
        if seen.contains(&g) {
            continue;
        }
        seen.push(g);
        let in_c = c.iter().filter(|x| *x == g).count();
        let in_r = r.iter().filter(|x| *x == g).count();
        overlap += in_c.min(in_r);
    }
    let p = if c.is_empty() { 0.0 } else { overlap as f64 / c.len() as f64 };
    let rc = if r.is_empty() { 0.0 } else { overlap as f64 / r.len() as f64 };
    let f = if p + rc == 0.0 { 0.0 } else { 2.0 * p * rc / (p + rc) };
    (p, rc, f)
}

fn rouge_oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2023);
    let alphabet: Vec<String> = "abcdefgh".chars().map(|c| c.to_string()).collect();
    let mut worst = 0.0f64;
    let mut comparisons = 0;
    for _ in 0..500 {
        let seq = |rng: &mut ChaCha8Rng| -> Vec<String> {
            let len = rng.gen_range(0..=40);
            (0..len).map(|_| alphabet[rng.gen_range(0..8)].clone()).collect()
        };
        let cand = seq(&mut rng);
        let refr = seq(&mut rng);
        for n in [1, 2, 4] {
            let (p, r, f) = oracle_rouge(&cand, &refr, n);
            let direct = rouge_n_tokens(&cand, &refr, n).map_err(|e| e.to_string())?;
            let text = rouge_n(&cand.join(" "), &refr.join(" "), n).map_err(|e| e.to_string())?;
            for got in [direct, text] {
                for (a, b) in [(got.precision, p), (got.recall, r), (got.f1, f)] {
                    worst = worst.max((a - b).abs());
                }
                comparisons += 1;
            }
        }
    }
    ensure(worst <= 1e-12, || format!("max |delta| {worst:e}"))?;
    within(start.elapsed(), Duration::from_secs(10), "oracle comparison")?;
    Ok(format!("{comparisons} comparisons, max |delta| {worst:e}, {:?}", start.elapsed()))
}

fn rouge_hand_cases() -> Outcome {
    let r1 = rouge_n("the cat sat", "the cat slept", 1).map_err(|e| e.to_string())?;
    let r2 = rouge_n("the cat sat", "the cat slept", 2).map_err(|e| e.to_string())?;
    // unigrams: overlap {the, cat} = 2 of 3 each side; bigrams: {the cat} = 1 of 2
    ensure((r1.f1 - 2.0 / 3.0).abs() <= 1e-12, || format!("R1 f1 {}", r1.f1))?;
    ensure((r2.f1 - 0.5).abs() <= 1e-12, || format!("R2 f1 {}", r2.f1))?;
    let identical = ["the cat sat on the mat today", "a b c d e", "ખેડૂતો માટે નવી યોજના જાહેર", "नई दिल्ली में बारिश हुई"];
    for s in identical {
        for n in [1, 2, 4] {
            let f = rouge_n(s, s, n).map_err(|e| e.to_string())?.f1;
            ensure(f == 1.0, || format!("identity `{s}` n={n}: {f}"))?;
        }
    }
    for (a, b) in [("a b c d", "e f g h"), ("the cat sat", "dogs run fast"), ("", "x y z")] {
        for n in [1, 2, 4] {
            let f = rouge_n(a, b, n).map_err(|e| e.to_string())?.f1;
            ensure(f == 0.0, || format!("disjoint `{a}`/`{b}` n={n}: {f}"))?;
        }
    }
    Ok(format!("R1 {:.6}, R2 {:.6}", r1.f1, r2.f1))
}

// ---------------------------------------------------------------------------
// Cross-lingual

const GU_WORDS: [&str; 24] = [
    "સરકાર", "ખેડૂત", "વરસાદ", "શહેર", "પોલીસ", "બજાર", "શાળા", "નદી", "ચૂંટણી", "હોસ્પિટલ", "ટ્રેન", "પુલ",
    "તહેવાર", "ટીમ", "ભાવ", "ગામ", "મંત્રી", "અદાલત", "અહેવાલ", "યોજના", "પાણી", "રસ્તો", "વિકાસ", "લોકો",
];

fn gujarati_article(rng: &mut ChaCha8Rng, id: usize) -> (String, Vec<String>) {
    let count = rng.gen_range(2..=6);
    let sentences: Vec<String> = (0..count)
        .map(|s| {
            let len = rng.gen_range(4..=12);
            let mut words: Vec<String> = (0..len).map(|_| GU_WORDS[rng.gen_range(0..GU_WORDS.len())].to_string()).collect();
            // keeps every sentence of every record distinct
            words.push(format!("ક{id}x{s}"));
            format!("{}.", words.join(" "))
        })
        .collect();
    (sentences.join(" "), sentences)
}

fn extractiveness() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let client = TranslationClient::new(Box::new(IdentityTranslator), Language::Gujarati, Language::English);
    let backend = LeadBaseline::new(Language::English);
    let handle = backend.base_handle();
    let mut first_ok = 0;
    for id in 0..100 {
        let (article, sentences) = gujarati_article(&mut rng, id);
        let source: HashSet<&str> = sentences.iter().map(String::as_str).collect();

        let full = pipeline_summarize(&article, &client, &backend, &handle, &GenerationParams::new(85), 0.6)
            .map_err(|e| format!("record {id}: {e}"))?;
        for s in split_sentences(&full, Language::Gujarati).iter() {
            ensure(source.contains(s), || format!("record {id}: `{s}` is not a source sentence"))?;
        }

        let budget = sentences[0].split_whitespace().count() as u32;
        let one = pipeline_summarize(&article, &client, &backend, &handle, &GenerationParams::new(budget), 0.6)
            .map_err(|e| format!("record {id}: {e}"))?;
        if one == sentences[0] {
            first_ok += 1;
        }
    }
    ensure(first_ok == 100, || format!("first sentence in {first_ok}/100"))?;
    within(start.elapsed(), Duration::from_secs(5), "100 records")?;
    Ok(format!("100/100 extractive, first sentence 100/100, {:?}", start.elapsed()))
}

fn back_map_fuzzy() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let vocab: Vec<String> = (0..2000).map(|i| format!("w{i}")).collect();
    let sentence = |words: &[String]| format!("{}.", words.join(" "));
    let (mut mapped, mut rejected) = (0, 0);
    for case in 0..100 {
        let mut pool = vocab.clone();
        pool.shuffle(&mut rng);
        let entries: Vec<Vec<String>> = (0..5).map(|i| pool[i * 10..(i + 1) * 10].to_vec()).collect();
        let unused = &pool[50..];
        let mapping = SentenceMapping::from_pairs(
            entries.iter().enumerate().map(|(i, e)| (format!("src-{case}-{i}."), sentence(e))),
        )
        .map_err(|e| e.to_string())?;

        let target = rng.gen_range(0..5);
        let mut substituted = entries[target].clone();
        substituted[rng.gen_range(0..10)] = unused[0].clone();
        match back_map(&sentence(&substituted), &mapping, 0.6) {
            Ok(out) if out == format!("src-{case}-{target}.") => mapped += 1,
            Ok(out) => return Err(format!("case {case}: mapped to `{out}`, expected entry {target}")),
            Err(e) => return Err(format!("case {case}: {e}")),
        }

        let disjoint: Vec<String> = unused[1..11].to_vec();
        match back_map(&sentence(&disjoint), &mapping, 0.6) {
            Err(CrossLingualError::NoAlignment { .. }) => rejected += 1,
            other => return Err(format!("case {case}: disjoint sentence gave {other:?}")),
        }
    }
    Ok(format!("substituted {mapped}/100 mapped, disjoint {rejected}/100 NoAlignment"))
}

// ---------------------------------------------------------------------------
// Augmentation

fn random_article(rng: &mut ChaCha8Rng, lang: Language) -> String {
    let words = ["rain", "city", "court", "market", "bridge", "farmer", "vote", "school", "river", "train"];
    let count = rng.gen_range(1..=8);
    (0..count)
        .map(|_| {
            let len = rng.gen_range(1..=9);
            let body: Vec<&str> = (0..len).map(|_| words[rng.gen_range(0..words.len())]).collect();
            let end = match lang {
                Language::Hindi => ["।", "?", "!"][rng.gen_range(0..3)],
                _ => [".", "?", "!"][rng.gen_range(0..3)],
            };
            format!("{}{end}", body.join(" "))
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn augmentation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for i in 0..200 {
        let lang = if i % 2 == 0 { Language::English } else { Language::Hindi };
        let article = random_article(&mut rng, lang);
        let record = ArticleRecord::new(format!("r{i}"), article.clone(), Some("gold.".into()));
        let n = split_sentences(&article, lang).len();

        let sorted = |text: &str| {
            let mut s = split_sentences(text, lang).into_sentences();
            s.sort();
            s
        };
        let once = right_shift(&record, lang);
        ensure(sorted(&once.article) == sorted(&article), || format!("article {i}: multiset changed"))?;
        ensure(once.summary == record.summary, || format!("article {i}: summary changed"))?;

        let mut cur = record.clone();
        for _ in 0..n {
            cur = right_shift(&cur, lang);
        }
        ensure(cur.article == article, || format!("article {i}: {n} shifts gave `{}`", cur.article))?;

        let still = add_noise(&record, 0.0, i).map_err(|e| e.to_string())?;
        ensure(still.article == record.article && still.summary == record.summary, || {
            format!("article {i}: rate 0 changed the record")
        })?;
    }

    let fixture = ArticleRecord::new(
        "noise",
        "one two three four five six seven eight nine ten eleven twelve thirteen fourteen fifteen sixteen seventeen eighteen nineteen twenty",
        Some("one two.".into()),
    );
    let a = add_noise(&fixture, 0.1, 42).map_err(|e| e.to_string())?;
    let b = add_noise(&fixture, 0.1, 42).map_err(|e| e.to_string())?;
    ensure(a == b, || "fixed-seed noise differs between runs".into())?;
    ensure(a.summary == fixture.summary, || "noise touched the summary".into())?;
    Ok(format!("200 articles; seed 42 keeps {} of 20 tokens", a.article.split_whitespace().count()))
}

// ---------------------------------------------------------------------------
// Extractive selection

fn extractive_selection() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let transforms: [Transform; 3] =
        [("cube", |x| x * x * x), ("sqrt", f64::sqrt), ("log", |x| (1.0 + x).ln() / 2f64.ln())];
    for case in 0..300 {
        let count = rng.gen_range(1..=10);
        let scored: Vec<ScoredSentence> = (0..count)
            .map(|position| {
                let long = rng.gen_bool(0.7);
                let sentence = if long {
                    format!("Sentence number {position} is comfortably long enough.")
                } else {
                    format!("Short {position}.")
                };
                let score = rng.gen_range(0..=1000) as f64 / 1000.0;
                ScoredSentence { sentence, score, position }
            })
            .collect();
        let k = rng.gen_range(1..=4);
        let out = select_summary(&scored, k, 25);

        let picked: Vec<usize> = split_sentences(&out, Language::English)
            .iter()
            .map(|s| scored.iter().position(|x| x.sentence == s).ok_or_else(|| format!("case {case}: `{s}` not in input")))
            .collect::<Result<_, _>>()?;
        ensure(!picked.is_empty() && picked.len() <= k, || format!("case {case}: {} sentences for k={k}", picked.len()))?;
        ensure(picked.windows(2).all(|w| w[0] < w[1]), || format!("case {case}: not in document order {picked:?}"))?;
        let any_long = scored.iter().any(|s| s.sentence.chars().count() > 25);
        if any_long {
            ensure(picked.iter().all(|&i| scored[i].sentence.chars().count() > 25), || {
                format!("case {case}: short sentence selected")
            })?;
        }

        for (name, f) in transforms {
            let moved: Vec<ScoredSentence> =
                scored.iter().map(|s| ScoredSentence { score: f(s.score), ..s.clone() }).collect();
            let again = select_summary(&moved, k, 25);
            ensure(again == out, || format!("case {case}: `{name}` transform changed the selection"))?;
        }
    }
    Ok("300 score vectors, 3 monotone transforms each".into())
}

// ---------------------------------------------------------------------------
// Ingestion

fn ingestion() -> Outcome {
    let path = data("english_50.csv");
    let first = load_csv(&path, SplitKind::Train, Language::English).map_err(|e| e.to_string())?;
    ensure(first.len() == 50, || format!("{} rows", first.len()))?;
    let mut buf = Vec::new();
    write_csv(&mut buf, &first.records, true).map_err(|e| e.to_string())?;
    let second = read_csv(buf.as_slice(), SplitKind::Train, Language::English).map_err(|e| e.to_string())?;
    let key = |r: &ArticleRecord| (r.id.clone(), r.article.clone(), r.summary.clone());
    let a: Vec<_> = first.records.iter().map(key).collect();
    let b: Vec<_> = second.records.iter().map(key).collect();
    ensure(a == b, || "round trip changed (id, article, summary)".into())?;

    match load_csv(data("english_50_no_summary.csv"), SplitKind::Train, Language::English) {
        Err(CorpusError::MissingColumn("Summary")) => {}
        other => return Err(format!("missing Summary column gave {other:?}")),
    }
    Ok("50 rows round-tripped; missing Summary -> MissingColumn".into())
}

// ---------------------------------------------------------------------------
// End to end

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let config = ExperimentConfig::new("Lead baseline", Language::English, data("english_50.csv"), dir.path());
    let a = run_experiment(&config).map_err(|e| e.to_string())?;
    let b = run_experiment(&config).map_err(|e| e.to_string())?;
    ensure(a.config_hash == b.config_hash, || "config hash differs".into())?;
    ensure(a.records == b.records && a.aggregate == b.aggregate, || "scores differ".into())?;
    ensure(a.same_outcome(&b), || "run records differ beyond the timestamp".into())?;
    let logged = load_runs(dir.path().join(RUN_LOG)).map_err(|e| e.to_string())?;
    ensure(logged.len() == 2 && logged[0] == a && logged[1] == b, || "run log does not hold both runs".into())?;

    let gu_dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let gu_csv = gu_dir.path().join("gu.csv");
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let records: Vec<ArticleRecord> = (0..20)
        .map(|i| {
            let (article, sentences) = gujarati_article(&mut rng, i);
            ArticleRecord::new(format!("gu-{i}"), article, Some(sentences[0].clone()))
        })
        .collect();
    write_csv(std::fs::File::create(&gu_csv).map_err(|e| e.to_string())?, &records, true).map_err(|e| e.to_string())?;
    let gu = ExperimentConfig {
        pipeline: PipelineKind::TranslateMap,
        translator: Some("identity".into()),
        ..ExperimentConfig::new("Translation+Mapping", Language::Gujarati, &gu_csv, gu_dir.path().join("out"))
    };
    let c = run_experiment(&gu).map_err(|e| e.to_string())?;
    let d = run_experiment(&gu).map_err(|e| e.to_string())?;
    ensure(c.same_outcome(&d), || "translate-map runs differ".into())?;
    Ok(format!("hash {}, ROUGE-1 {:.4}", &a.config_hash[..12], a.aggregate[&1].f1))
}

/// Full-scale reference numbers. Needs real data and trained adapters,
/// supplied as run configs in `SUMKIT_FULL_SCALE_DIR`.
fn full_scale() -> Option<Outcome> {
    let dir = PathBuf::from(std::env::var_os("SUMKIT_FULL_SCALE_DIR")?);
    let targets = [("english.toml", 0.5618), ("hindi.toml", 0.5536), ("gujarati.toml", 0.2028)];
    let mut notes = Vec::new();
    for (file, expected) in targets {
        let outcome = ExperimentConfig::load(dir.join(file)).and_then(|c| run_experiment(&c));
        match outcome {
            Ok(run) => {
                let got = run.aggregate[&1].f1;
                if (got - expected).abs() > 0.03 {
                    return Some(Err(format!("{file}: ROUGE-1 {got:.4}, expected {expected} +/- 0.03")));
                }
                notes.push(format!("{file} {got:.4}"));
            }
            Err(e) => return Some(Err(format!("{file}: {e}"))),
        }
    }
    Some(Ok(notes.join(", ")))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("rouge oracle equivalence", rouge_oracle_equivalence),
        ("rouge hand-computed cases", rouge_hand_cases),
        ("extractiveness of translate-map", extractiveness),
        ("back-map fuzzy branch", back_map_fuzzy),
        ("augmentation invariants", augmentation),
        ("extractive selection properties", extractive_selection),
        ("ingestion round trip", ingestion),
        ("end-to-end determinism", determinism),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        match check() {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail}");
            }
        }
    }
    match full_scale() {
        None => println!("SKIP  full-scale reference scores: SUMKIT_FULL_SCALE_DIR not set"),
        Some(Ok(detail)) => println!("PASS  full-scale reference scores: {detail}"),
        Some(Err(detail)) => {
            failed += 1;
            println!("FAIL  full-scale reference scores: {detail}");
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
