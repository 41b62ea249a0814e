//! Sentence segmentation, whitespace tokenization and batch padding.
//!
//! Segmentation is a pure delimiter split: no abbreviation handling, so
//! "Dr. Rao" yields two sentences. Subword tokenization belongs to the
//! backends.

use std::ops::Range;

use crate::Language;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SegmentError {
    #[error("cannot pad an empty batch")]
    EmptyBatch,
}

/// Sentences of one text, each with its byte span in the original.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SentenceList {
    sentences: Vec<String>,
    spans: Vec<Range<usize>>,
}

impl SentenceList {
    pub fn sentences(&self) -> &[String] {
        &self.sentences
    }

    /// Byte ranges into the text the list was split from.
    pub fn spans(&self) -> &[Range<usize>] {
        &self.spans
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.sentences.iter().map(String::as_str)
    }

    pub fn into_sentences(self) -> Vec<String> {
        self.sentences
    }

    /// Sentences joined with single spaces.
    pub fn joined(&self) -> String {
        self.sentences.join(" ")
    }
}

/// Characters that terminate a sentence in `language`.
pub fn is_delimiter(c: char, language: Language) -> bool {
    match c {
        '.' | '?' | '!' => true,
        '।' => language == Language::Hindi,
        _ => false,
    }
}

/// Splits `text` after every run of sentence delimiters.
///
/// The delimiter run stays with its sentence; surrounding whitespace is
/// trimmed and whitespace-only segments are dropped.
pub fn split_sentences(text: &str, language: Language) -> SentenceList {
    let mut list = SentenceList::default();
    let mut push = |start: usize, end: usize| {
        let raw = &text[start..end];
        let lead = raw.len() - raw.trim_start().len();
        let trimmed = raw.trim();
        if !trimmed.is_empty() {
            let s = start + lead;
            list.sentences.push(trimmed.to_string());
            list.spans.push(s..s + trimmed.len());
        }
    };

    let mut start = 0;
    let mut chars = text.char_indices().peekable();
    while let Some((_, c)) = chars.next() {
        if !is_delimiter(c, language) {
            continue;
        }
        while let Some(&(_, next)) = chars.peek() {
            if is_delimiter(next, language) {
                chars.next();
            } else {
                break;
            }
        }
        let end = chars.peek().map_or(text.len(), |&(i, _)| i);
        push(start, end);
        start = end;
    }
    if start < text.len() {
        push(start, text.len());
    }
    list
}

/// Whitespace tokenization; never yields empty tokens.
pub fn tokenize_words(text: &str) -> Vec<&str> {
    text.split_whitespace().collect()
}

/// A right-padded id matrix with its attention mask.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PaddedBatch {
    pub ids: Vec<Vec<u32>>,
    /// 1 for real tokens, 0 for padding.
    pub mask: Vec<Vec<u8>>,
}

impl PaddedBatch {
    pub fn width(&self) -> usize {
        self.ids.first().map_or(0, Vec::len)
    }
}

/// Pads every sequence to the longest length in the batch.
pub fn pad_batch(sequences: &[Vec<u32>], pad_id: u32) -> Result<PaddedBatch, SegmentError> {
    if sequences.is_empty() {
        return Err(SegmentError::EmptyBatch);
    }
    let width = sequences.iter().map(Vec::len).max().unwrap_or(0);
    let mut ids = Vec::with_capacity(sequences.len());
    let mut mask = Vec::with_capacity(sequences.len());
    for seq in sequences {
        let mut row = seq.clone();
        row.resize(width, pad_id);
        let mut m = vec![1u8; seq.len()];
        m.resize(width, 0);
        ids.push(row);
        mask.push(m);
    }
    Ok(PaddedBatch { ids, mask })
}
