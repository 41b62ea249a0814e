//! Sentence translation with a persistent cache and bounded retries.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Mutex, RwLock};
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::CrossLingualError;
use crate::text;
use crate::Language;

pub const API_KEY_VAR: &str = "TRANSLATE_API_KEY";
pub const DEFAULT_CONCURRENCY: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{0}")]
pub struct TranslatorError(pub String);

/// A sentence translation service.
pub trait Translator: Send + Sync {
    fn name(&self) -> &str;
    fn translate(&self, sentence: &str, source: Language, target: Language) -> Result<String, TranslatorError>;
}

/// Returns its input unchanged.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityTranslator;

impl Translator for IdentityTranslator {
    fn name(&self) -> &str {
        "identity"
    }

    fn translate(&self, sentence: &str, _: Language, _: Language) -> Result<String, TranslatorError> {
        Ok(sentence.to_string())
    }
}

/// Looks sentences up in a fixed table; unknown sentences are errors.
#[derive(Debug, Clone, Default)]
pub struct TableTranslator {
    table: HashMap<String, String>,
}

impl TableTranslator {
    pub fn new<I, S, T>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (S, T)>,
        S: AsRef<str>,
        T: AsRef<str>,
    {
        TableTranslator {
            table: pairs
                .into_iter()
                .map(|(s, t)| (text::nfc(s.as_ref().trim()), text::nfc(t.as_ref().trim())))
                .collect(),
        }
    }

    /// Reads a two-column (source, translation) UTF-8 TSV file. Blank lines
    /// are skipped.
    pub fn from_tsv(path: impl AsRef<Path>) -> Result<Self, CrossLingualError> {
        let data = std::fs::read_to_string(path)?;
        Self::parse_tsv(&data)
    }

    pub fn parse_tsv(data: &str) -> Result<Self, CrossLingualError> {
        let mut pairs = Vec::new();
        for (i, line) in data.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let mut cols = line.split('\t');
            match (cols.next(), cols.next(), cols.next()) {
                (Some(src), Some(dst), None) if !src.trim().is_empty() && !dst.trim().is_empty() => {
                    pairs.push((src, dst))
                }
                _ => {
                    return Err(CrossLingualError::TableFormat {
                        line: i + 1,
                        message: "expected two nonempty tab-separated columns".into(),
                    })
                }
            }
        }
        Ok(Self::new(pairs))
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }
}

impl Translator for TableTranslator {
    fn name(&self) -> &str {
        "table"
    }

    fn translate(&self, sentence: &str, _: Language, _: Language) -> Result<String, TranslatorError> {
        self.table
            .get(&text::nfc(sentence.trim()))
            .cloned()
            .ok_or_else(|| TranslatorError(format!("no table entry for `{sentence}`")))
    }
}

const GOOGLE_ENDPOINT: &str = "https://translation.googleapis.com/language/translate/v2";

/// Cloud Translation (v2 REST) client.
pub struct LiveTranslator {
    http: reqwest::blocking::Client,
    endpoint: String,
    api_key: String,
}

#[derive(Serialize)]
struct LiveRequest<'a> {
    q: &'a str,
    source: &'a str,
    target: &'a str,
    format: &'a str,
}

#[derive(Deserialize)]
struct LiveResponse {
    data: LiveData,
}

#[derive(Deserialize)]
struct LiveData {
    translations: Vec<LiveTranslation>,
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct LiveTranslation {
    translated_text: String,
}

impl LiveTranslator {
    /// Reads the API key from `TRANSLATE_API_KEY`.
    pub fn from_env() -> Result<Self, CrossLingualError> {
        let key = std::env::var(API_KEY_VAR).map_err(|_| CrossLingualError::MissingApiKey)?;
        if key.trim().is_empty() {
            return Err(CrossLingualError::MissingApiKey);
        }
        Ok(Self::new(key, GOOGLE_ENDPOINT))
    }

    pub fn new(api_key: impl Into<String>, endpoint: impl Into<String>) -> Self {
        let http = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(30))
            .build()
            .expect("http client builds");
        LiveTranslator { http, endpoint: endpoint.into(), api_key: api_key.into() }
    }

    fn parse_response(body: &str) -> Result<String, TranslatorError> {
        let resp: LiveResponse =
            serde_json::from_str(body).map_err(|e| TranslatorError(format!("unexpected response: {e}")))?;
        resp.data
            .translations
            .into_iter()
            .next()
            .map(|t| t.translated_text)
            .ok_or_else(|| TranslatorError("response carried no translation".into()))
    }
}

impl Translator for LiveTranslator {
    fn name(&self) -> &str {
        "live"
    }

    fn translate(&self, sentence: &str, source: Language, target: Language) -> Result<String, TranslatorError> {
        let body = LiveRequest { q: sentence, source: source.code(), target: target.code(), format: "text" };
        let resp = self
            .http
            .post(&self.endpoint)
            .query(&[("key", &self.api_key)])
            .json(&body)
            .send()
            .map_err(|e| TranslatorError(e.to_string()))?;
        let status = resp.status();
        let text = resp.text().map_err(|e| TranslatorError(e.to_string()))?;
        if !status.is_success() {
            return Err(TranslatorError(format!("http {status}: {text}")));
        }
        Self::parse_response(&text)
    }
}

/// One line of the cache file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheRecord {
    pub src: String,
    pub src_lang: String,
    pub tgt_lang: String,
    pub dst: String,
}

type CacheKey = (String, Language, Language);

/// Translation memo keyed by (sentence, language pair). When backed by a
/// file, every new entry is appended as one JSON line.
#[derive(Debug, Default)]
pub struct TranslationCache {
    entries: RwLock<HashMap<CacheKey, String>>,
    log: Option<Mutex<File>>,
}

impl TranslationCache {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Loads existing records from `path` (if present) and appends to it.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, CrossLingualError> {
        let path = path.as_ref();
        let mut entries = HashMap::new();
        if path.exists() {
            for (i, line) in BufReader::new(File::open(path)?).lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let rec: CacheRecord = serde_json::from_str(&line).map_err(|e| CrossLingualError::CacheFormat {
                    line: i + 1,
                    message: e.to_string(),
                })?;
                let lang = |code: &str| {
                    code.parse::<Language>().map_err(|e| CrossLingualError::CacheFormat {
                        line: i + 1,
                        message: e.to_string(),
                    })
                };
                entries.insert((rec.src, lang(&rec.src_lang)?, lang(&rec.tgt_lang)?), rec.dst);
            }
        }
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(TranslationCache { entries: RwLock::new(entries), log: Some(Mutex::new(file)) })
    }

    pub fn get(&self, src: &str, source: Language, target: Language) -> Option<String> {
        let entries = self.entries.read().unwrap_or_else(|p| p.into_inner());
        entries.get(&(src.to_string(), source, target)).cloned()
    }

    pub fn insert(&self, src: &str, source: Language, target: Language, dst: &str) -> io::Result<()> {
        let key = (src.to_string(), source, target);
        {
            let mut entries = self.entries.write().unwrap_or_else(|p| p.into_inner());
            if entries.get(&key).is_some_and(|d| d == dst) {
                return Ok(());
            }
            entries.insert(key, dst.to_string());
        }
        if let Some(log) = &self.log {
            let rec = CacheRecord {
                src: src.to_string(),
                src_lang: source.code().into(),
                tgt_lang: target.code().into(),
                dst: dst.to_string(),
            };
            let mut line = serde_json::to_string(&rec).expect("cache record serializes");
            line.push('\n');
            let mut file = log.lock().unwrap_or_else(|p| p.into_inner());
            file.write_all(line.as_bytes())?;
            file.flush()?;
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.read().unwrap_or_else(|p| p.into_inner()).len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Exponential backoff: wait `base_delay * 2^i` after failed attempt `i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    pub attempts: u32,
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy { attempts: 3, base_delay: Duration::from_millis(250) }
    }
}

impl RetryPolicy {
    pub fn delay_after(&self, attempt: u32) -> Duration {
        self.base_delay * 2u32.saturating_pow(attempt)
    }
}

/// A translator bound to one language pair, with caching and retries.
pub struct TranslationClient {
    translator: Box<dyn Translator>,
    source: Language,
    target: Language,
    cache: TranslationCache,
    retry: RetryPolicy,
    concurrency: usize,
}

impl TranslationClient {
    pub fn new(translator: Box<dyn Translator>, source: Language, target: Language) -> Self {
        TranslationClient {
            translator,
            source,
            target,
            cache: TranslationCache::in_memory(),
            retry: RetryPolicy::default(),
            concurrency: DEFAULT_CONCURRENCY,
        }
    }

    pub fn with_cache(mut self, cache: TranslationCache) -> Self {
        self.cache = cache;
        self
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn with_concurrency(mut self, limit: usize) -> Self {
        self.concurrency = limit.max(1);
        self
    }

    pub fn source(&self) -> Language {
        self.source
    }

    pub fn target(&self) -> Language {
        self.target
    }

    pub fn translator_name(&self) -> &str {
        self.translator.name()
    }

    pub fn cache(&self) -> &TranslationCache {
        &self.cache
    }

    /// Translates one sentence, consulting the cache first.
    pub fn translate(&self, sentence: &str) -> Result<String, CrossLingualError> {
        if let Some(hit) = self.cache.get(sentence, self.source, self.target) {
            return Ok(hit);
        }
        let attempts = self.retry.attempts.max(1);
        let mut last = String::new();
        for attempt in 0..attempts {
            match self.translator.translate(sentence, self.source, self.target) {
                Ok(out) if !out.trim().is_empty() => {
                    let out = text::nfc(out.trim());
                    self.cache.insert(sentence, self.source, self.target, &out)?;
                    return Ok(out);
                }
                Ok(_) => last = "empty translation".into(),
                Err(e) => last = e.0,
            }
            if attempt + 1 < attempts {
                thread::sleep(self.retry.delay_after(attempt));
            }
        }
        Err(CrossLingualError::TranslationFailure { sentence: sentence.to_string(), attempts, message: last })
    }

    /// Translates a batch. Each distinct sentence is requested once; up to
    /// the concurrency limit run in parallel. The first failure in input
    /// order is returned.
    pub fn translate_all(&self, sentences: &[String]) -> Result<Vec<String>, CrossLingualError> {
        let mut distinct: Vec<&str> = Vec::new();
        let mut slot: HashMap<&str, usize> = HashMap::new();
        for s in sentences {
            slot.entry(s.as_str()).or_insert_with(|| {
                distinct.push(s);
                distinct.len() - 1
            });
        }

        let results: Vec<Mutex<Option<Result<String, CrossLingualError>>>> =
            distinct.iter().map(|_| Mutex::new(None)).collect();
        let next = AtomicUsize::new(0);
        let workers = self.concurrency.min(distinct.len()).max(1);
        thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    let Some(sentence) = distinct.get(i) else { break };
                    let r = self.translate(sentence);
                    *results[i].lock().unwrap_or_else(|p| p.into_inner()) = Some(r);
                });
            }
        });

        let done: Vec<Result<String, CrossLingualError>> = results
            .into_iter()
            .map(|m| m.into_inner().unwrap_or_else(|p| p.into_inner()).expect("every slot filled"))
            .collect();
        sentences
            .iter()
            .map(|s| done[slot[s.as_str()]].clone())
            .collect()
    }
}
