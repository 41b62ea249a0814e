//! Sentence-classification extractive summarization.
//!
//! A [`SentenceScorer`] assigns each sentence a probability of belonging to
//! the summary; [`select_summary`] keeps the best-scoring sentences that are
//! long enough and emits them in document order.

use std::collections::HashSet;
use std::sync::Arc;

use crate::backends::adapter::{ScoreReply, ScoreRequest, OP_SCORE};
use crate::backends::{AdapterClient, BackendError, ModelHandle};
use crate::segment::SentenceList;
use crate::text::metric_tokens;

pub const DEFAULT_TOP_K: usize = 2;
/// Sentences must be strictly longer than this many characters.
pub const DEFAULT_MIN_CHARS: usize = 25;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExtractiveError {
    #[error("no sentences to score")]
    EmptyInput,
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error("scorer returned {got} scores for {expected} sentences")]
    ScoreCount { expected: usize, got: usize },
    #[error("score {score} at position {position} is outside [0, 1]")]
    ScoreRange { position: usize, score: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredSentence {
    pub sentence: String,
    pub score: f64,
    pub position: usize,
}

pub trait SentenceScorer {
    fn score(&self, sentences: &[String]) -> Result<Vec<f64>, ExtractiveError>;
}

impl<F> SentenceScorer for F
where
    F: Fn(&[String]) -> Vec<f64>,
{
    fn score(&self, sentences: &[String]) -> Result<Vec<f64>, ExtractiveError> {
        Ok(self(sentences))
    }
}

/// Fraction of a sentence's distinct words that also occur in the heading.
#[derive(Debug, Clone)]
pub struct HeadingOverlapScorer {
    heading: HashSet<String>,
}

impl HeadingOverlapScorer {
    pub fn new(heading: &str) -> Self {
        HeadingOverlapScorer { heading: metric_tokens(heading).into_iter().collect() }
    }
}

impl SentenceScorer for HeadingOverlapScorer {
    fn score(&self, sentences: &[String]) -> Result<Vec<f64>, ExtractiveError> {
        Ok(sentences
            .iter()
            .map(|s| {
                let words: HashSet<String> = metric_tokens(s).into_iter().collect();
                if words.is_empty() {
                    return 0.0;
                }
                words.iter().filter(|w| self.heading.contains(*w)).count() as f64 / words.len() as f64
            })
            .collect())
    }
}

/// Trained sentence classifier served by an adapter (`score` op).
pub struct AdapterScorer {
    client: Arc<AdapterClient>,
    handle: ModelHandle,
}

impl AdapterScorer {
    pub fn new(client: Arc<AdapterClient>, handle: ModelHandle) -> Self {
        AdapterScorer { client, handle }
    }
}

impl SentenceScorer for AdapterScorer {
    fn score(&self, sentences: &[String]) -> Result<Vec<f64>, ExtractiveError> {
        let req = ScoreRequest {
            model_id: self.handle.model_id.clone(),
            checkpoint: self.handle.checkpoint.clone(),
            sentences: sentences.to_vec(),
        };
        let reply: ScoreReply = self.client.call_typed(OP_SCORE, &req)?;
        Ok(reply.scores)
    }
}

/// Scores every sentence, checking count and range of the scorer output.
pub fn score_sentences(scorer: &dyn SentenceScorer, sentences: &SentenceList) -> Result<Vec<ScoredSentence>, ExtractiveError> {
    if sentences.is_empty() {
        return Err(ExtractiveError::EmptyInput);
    }
    let scores = scorer.score(sentences.sentences())?;
    if scores.len() != sentences.len() {
        return Err(ExtractiveError::ScoreCount { expected: sentences.len(), got: scores.len() });
    }
    sentences
        .iter()
        .zip(scores)
        .enumerate()
        .map(|(position, (sentence, score))| {
            if !(0.0..=1.0).contains(&score) {
                return Err(ExtractiveError::ScoreRange { position, score });
            }
            Ok(ScoredSentence { sentence: sentence.to_string(), score, position })
        })
        .collect()
}

/// Picks up to `k` sentences longer than `min_chars` characters by score
/// (ties to the earlier sentence) and joins them in document order.
///
/// With no sentence long enough, the best-scoring sentence is returned
/// alone. An empty input gives an empty string.
pub fn select_summary(scored: &[ScoredSentence], k: usize, min_chars: usize) -> String {
    let by_rank = |a: &&ScoredSentence, b: &&ScoredSentence| {
        b.score.total_cmp(&a.score).then(a.position.cmp(&b.position))
    };
    let mut eligible: Vec<&ScoredSentence> =
        scored.iter().filter(|s| s.sentence.chars().count() > min_chars).collect();
    if eligible.is_empty() {
        return scored.iter().min_by(by_rank).map(|s| s.sentence.clone()).unwrap_or_default();
    }
    eligible.sort_by(by_rank);
    eligible.truncate(k);
    eligible.sort_by_key(|s| s.position);
    eligible.iter().map(|s| s.sentence.as_str()).collect::<Vec<_>>().join(" ")
}
