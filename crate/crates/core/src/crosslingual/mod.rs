//! Translate, summarize in English, and map the summary back onto the
//! original-language sentences.
//!
//! The article is split into sentences and each sentence is translated on
//! its own, keeping a [`SentenceMapping`]. The English article is
//! summarized by any backend, and every summary sentence is aligned to a
//! mapping entry. The output consists only of original sentences, in
//! article order.

use std::collections::BTreeSet;

use crate::backends::{self, BackendError, GenerationParams, ModelHandle, SummarizerBackend};
use crate::rouge::rouge_n_tokens;
use crate::segment::split_sentences;
use crate::text::{collapse_whitespace, metric_tokens};
use crate::Language;

mod client;

pub use client::{
    CacheRecord, IdentityTranslator, LiveTranslator, RetryPolicy, TableTranslator, TranslationCache,
    TranslationClient, Translator, TranslatorError, API_KEY_VAR, DEFAULT_CONCURRENCY,
};

/// Minimum unigram F1 for a fuzzy alignment.
pub const DEFAULT_THRESHOLD: f64 = 0.6;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CrossLingualError {
    #[error("article is empty")]
    EmptyInput,
    #[error("summary has no sentences")]
    EmptySummary,
    #[error("sentence mapping is empty")]
    EmptyMapping,
    #[error("translation of `{sentence}` failed after {attempts} attempts: {message}")]
    TranslationFailure { sentence: String, attempts: u32, message: String },
    #[error("summary sentence `{sentence}` aligns with no source sentence (best unigram F1 {best_f1:.3})")]
    NoAlignment { sentence: String, best_f1: f64 },
    #[error("translation table line {line}: {message}")]
    TableFormat { line: usize, message: String },
    #[error("translation cache line {line}: {message}")]
    CacheFormat { line: usize, message: String },
    #[error("environment variable {} is not set", API_KEY_VAR)]
    MissingApiKey,
    #[error("i/o error: {0}")]
    Io(String),
    #[error(transparent)]
    Backend(#[from] BackendError),
}

impl From<std::io::Error> for CrossLingualError {
    fn from(e: std::io::Error) -> Self {
        CrossLingualError::Io(e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MappingEntry {
    pub index: usize,
    pub source: String,
    pub translated: String,
}

/// Source sentences paired with their translations, in document order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SentenceMapping {
    entries: Vec<MappingEntry>,
}

impl SentenceMapping {
    /// Builds a mapping with indices `0..n`. Translations must be nonempty.
    pub fn from_pairs<I, S, T>(pairs: I) -> Result<Self, CrossLingualError>
    where
        I: IntoIterator<Item = (S, T)>,
        S: Into<String>,
        T: Into<String>,
    {
        let mut entries = Vec::new();
        for (index, (source, translated)) in pairs.into_iter().enumerate() {
            let (source, translated) = (source.into(), translated.into());
            if translated.trim().is_empty() {
                return Err(CrossLingualError::TranslationFailure {
                    sentence: source,
                    attempts: 0,
                    message: "empty translation".into(),
                });
            }
            entries.push(MappingEntry { index, source, translated });
        }
        Ok(SentenceMapping { entries })
    }

    pub fn entries(&self) -> &[MappingEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Translations joined with single spaces.
    pub fn translated_text(&self) -> String {
        self.entries.iter().map(|e| e.translated.as_str()).collect::<Vec<_>>().join(" ")
    }
}

/// Splits the article in the client's source language and translates each
/// sentence. Returns the English article and the mapping.
pub fn build_mapping(article: &str, client: &TranslationClient) -> Result<(String, SentenceMapping), CrossLingualError> {
    let sentences = split_sentences(article, client.source()).into_sentences();
    if sentences.is_empty() {
        return Err(CrossLingualError::EmptyInput);
    }
    let translations = client.translate_all(&sentences)?;
    let mapping = SentenceMapping::from_pairs(sentences.into_iter().zip(translations))?;
    Ok((mapping.translated_text(), mapping))
}

fn normalized(s: &str) -> String {
    collapse_whitespace(&s.to_lowercase())
}

/// Index of the entry one summary sentence aligns with.
///
/// Tried in order: exact match after case and whitespace normalization;
/// the sentence's words occurring contiguously inside one translation
/// (a translation with an inner full stop, as in "Dr. Rao", is split in
/// two by the summarizer); best unigram F1 at or above `threshold`. Ties
/// go to the lowest index.
fn align(sentence: &str, mapping: &SentenceMapping, threshold: f64) -> Result<usize, CrossLingualError> {
    let norm = normalized(sentence);
    let targets: Vec<String> = mapping.entries.iter().map(|e| normalized(&e.translated)).collect();
    if let Some(i) = targets.iter().position(|t| *t == norm) {
        return Ok(i);
    }
    let words: Vec<&str> = norm.split(' ').collect();
    if let Some(i) = targets
        .iter()
        .position(|t| t.split(' ').collect::<Vec<_>>().windows(words.len()).any(|w| w == words.as_slice()))
    {
        return Ok(i);
    }
    let tokens = metric_tokens(sentence);
    let mut best = (0usize, f64::NEG_INFINITY);
    for (i, e) in mapping.entries.iter().enumerate() {
        let f1 = rouge_n_tokens(&tokens, &metric_tokens(&e.translated), 1)
            .expect("order 1 is valid")
            .f1;
        if f1 > best.1 {
            best = (i, f1);
        }
    }
    if best.1 >= threshold {
        Ok(best.0)
    } else {
        Err(CrossLingualError::NoAlignment { sentence: sentence.to_string(), best_f1: best.1.max(0.0) })
    }
}

/// Replaces each English summary sentence with its aligned source
/// sentence. Output is deduplicated and in article order.
pub fn back_map(english_summary: &str, mapping: &SentenceMapping, threshold: f64) -> Result<String, CrossLingualError> {
    if mapping.is_empty() {
        return Err(CrossLingualError::EmptyMapping);
    }
    let sentences: Vec<String> = split_sentences(english_summary, Language::English)
        .into_sentences()
        .into_iter()
        .filter(|s| !metric_tokens(s).is_empty())
        .collect();
    if sentences.is_empty() {
        return Err(CrossLingualError::EmptySummary);
    }
    let mut chosen = BTreeSet::new();
    for s in &sentences {
        chosen.insert(align(s, mapping, threshold)?);
    }
    Ok(chosen
        .into_iter()
        .map(|i| mapping.entries[i].source.as_str())
        .collect::<Vec<_>>()
        .join(" "))
}

/// build_mapping, summarize the English side, back_map.
pub fn pipeline_summarize(
    article: &str,
    client: &TranslationClient,
    backend: &dyn SummarizerBackend,
    handle: &ModelHandle,
    params: &GenerationParams,
    threshold: f64,
) -> Result<String, CrossLingualError> {
    let (english, mapping) = build_mapping(article, client)?;
    let summary = backends::summarize(backend, handle, &english, params)?;
    back_map(&summary, &mapping, threshold)
}
