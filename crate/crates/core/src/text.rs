//! Character-level normalization shared by cleaning, labeling and ROUGE.

use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

const ZWNJ: char = '\u{200C}';
const ZWJ: char = '\u{200D}';

/// Canonical composition (NFC).
pub fn nfc(text: &str) -> String {
    text.nfc().collect()
}

/// Characters that survive punctuation stripping: letters, digits and the
/// combining marks and joiners that Indic scripts build syllables from.
pub fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || is_combining_mark(c) || c == ZWNJ || c == ZWJ
}

/// Replaces every non-word, non-whitespace character with nothing.
pub fn strip_punctuation(text: &str) -> String {
    text.chars()
        .filter(|&c| is_word_char(c) || c.is_whitespace())
        .collect()
}

/// Joins whitespace-separated tokens with single spaces.
pub fn collapse_whitespace(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for token in text.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(token);
    }
    out
}

/// Token normalization used for overlap metrics: NFC, lowercase,
/// punctuation stripped, split on whitespace.
pub fn metric_tokens(text: &str) -> Vec<String> {
    strip_punctuation(&nfc(text).to_lowercase())
        .split_whitespace()
        .map(str::to_owned)
        .collect()
}
