//! Dataset augmentation and extractive label construction.
//!
//! Randomized operations draw from `ChaCha8Rng::seed_from_u64(seed)`, so a
//! given (input, seed) pair produces the same output on every platform.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{clean_text, ArticleRecord, CleanOptions};
use crate::rouge::{ngrams, NGramMultiset};
use crate::segment::{is_delimiter, split_sentences, tokenize_words};
use crate::Language;

pub const RIGHT_SHIFT_SUFFIX: &str = "-rs";
pub const NOISE_SUFFIX: &str = "-noise";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AugmentError {
    #[error("noise rate must lie in [0, 1], got {0}")]
    InvalidRate(f64),
    #[error("record `{0}` has no gold summary")]
    MissingGoldSummary(String),
    #[error("record `{0}` has no sentences")]
    EmptyArticle(String),
    #[error("cannot balance: {positives} positive and {negatives} negative examples")]
    DegenerateClassDistribution { positives: usize, negatives: usize },
}

/// Moves the last sentence of the article to the front.
///
/// A final sentence without a terminator gets the language's full stop so
/// that it stays a separate sentence once it is no longer last.
pub fn right_shift(record: &ArticleRecord, language: Language) -> ArticleRecord {
    let mut sentences = split_sentences(&record.article, language).into_sentences();
    let mut out = record.clone();
    out.id.push_str(RIGHT_SHIFT_SUFFIX);
    if sentences.len() < 2 {
        return out;
    }
    let mut last = sentences.pop().expect("at least two sentences");
    if !last.chars().last().is_some_and(|c| is_delimiter(c, language)) {
        last.push(language.full_stop());
    }
    sentences.insert(0, last);
    out.article = sentences.join(" ");
    out
}

/// Drops each whitespace token independently with probability `rate`.
///
/// The article is left byte-for-byte unchanged when no token is dropped.
pub fn add_noise(record: &ArticleRecord, rate: f64, seed: u64) -> Result<ArticleRecord, AugmentError> {
    if !(0.0..=1.0).contains(&rate) {
        return Err(AugmentError::InvalidRate(rate));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tokens = tokenize_words(&record.article);
    let kept: Vec<&str> = tokens
        .iter()
        .copied()
        .filter(|_| rng.gen::<f64>() >= rate)
        .collect();
    let mut out = record.clone();
    out.id.push_str(NOISE_SUFFIX);
    if kept.len() != tokens.len() {
        out.article = kept.join(" ");
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledSentence {
    pub sentence: String,
    /// 1 when the sentence belongs to the gold summary.
    pub label: u8,
    pub record_id: String,
    pub position: usize,
}

/// Labels article sentences against the gold summary.
///
/// Matching is done on lowercased, punctuation-free text. Every sentence
/// equal to some gold sentence is positive. Without any exact match the
/// sentence with the highest unigram recall against the whole summary is
/// the single positive (ties go to the earliest).
pub fn label_sentences(record: &ArticleRecord, language: Language) -> Result<Vec<LabeledSentence>, AugmentError> {
    let summary = record
        .summary
        .as_deref()
        .filter(|s| !s.trim().is_empty())
        .ok_or_else(|| AugmentError::MissingGoldSummary(record.id.clone()))?;
    let sentences = split_sentences(&record.article, language);
    if sentences.is_empty() {
        return Err(AugmentError::EmptyArticle(record.id.clone()));
    }

    let opts = CleanOptions::matching();
    let cleaned: Vec<String> = sentences.iter().map(|s| clean_text(s, &opts)).collect();
    let gold: Vec<String> = split_sentences(summary, language)
        .iter()
        .map(|s| clean_text(s, &opts))
        .filter(|s| !s.is_empty())
        .collect();

    let mut labels: Vec<u8> = cleaned
        .iter()
        .map(|c| u8::from(!c.is_empty() && gold.contains(c)))
        .collect();

    if !labels.contains(&1) {
        let gold_tokens = words(&clean_text(summary, &opts));
        let gold_grams = unigrams(&gold_tokens);
        let total = gold_grams.total().max(1) as f64;
        let mut best = (0usize, f64::NEG_INFINITY);
        for (i, c) in cleaned.iter().enumerate() {
            let toks = words(c);
            let recall = unigrams(&toks).clipped_overlap(&gold_grams) as f64 / total;
            if recall > best.1 {
                best = (i, recall);
            }
        }
        labels[best.0] = 1;
    }

    Ok(sentences
        .iter()
        .zip(labels)
        .enumerate()
        .map(|(position, (sentence, label))| LabeledSentence {
            sentence: sentence.to_string(),
            label,
            record_id: record.id.clone(),
            position,
        })
        .collect())
}

fn unigrams(tokens: &[String]) -> NGramMultiset<'_> {
    ngrams(tokens, 1).expect("order 1 is valid")
}

fn words(s: &str) -> Vec<String> {
    tokenize_words(s).into_iter().map(str::to_owned).collect()
}

/// Upsamples the minority class with replacement until both classes have
/// the same size. The input comes first, unchanged; samples are appended.
pub fn balance_labels(labeled: &[LabeledSentence], seed: u64) -> Result<Vec<LabeledSentence>, AugmentError> {
    let (pos, neg): (Vec<&LabeledSentence>, Vec<&LabeledSentence>) =
        labeled.iter().partition(|l| l.label == 1);
    if pos.is_empty() || neg.is_empty() {
        return Err(AugmentError::DegenerateClassDistribution {
            positives: pos.len(),
            negatives: neg.len(),
        });
    }
    let (minority, deficit) = if pos.len() < neg.len() {
        (&pos, neg.len() - pos.len())
    } else {
        (&neg, pos.len() - neg.len())
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = labeled.to_vec();
    out.extend((0..deficit).map(|_| (*minority.choose(&mut rng).expect("nonempty")).clone()));
    Ok(out)
}
