//! ROUGE-N with clipped n-gram counts and macro-averaged corpus scores.
//!
//! Tokens are whitespace-separated after NFC, lowercasing and punctuation
//! stripping. No stemming and no stopword removal.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::text::metric_tokens;

/// The n-gram orders reported by default.
pub const REPORTED_ORDERS: [usize; 3] = [1, 2, 4];

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RougeError {
    #[error("n-gram order must be at least 1, got {0}")]
    InvalidN(usize),
    #[error("cannot score an empty corpus")]
    EmptyCorpus,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RougeScore {
    pub n: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl RougeScore {
    /// Builds a score from precision and recall, deriving F1.
    pub fn from_pr(n: usize, precision: f64, recall: f64) -> Self {
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        RougeScore { n, precision, recall, f1 }
    }
}

/// Multiset of contiguous n-token windows, borrowing from the token list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NGramMultiset<'a> {
    n: usize,
    counts: HashMap<&'a [String], usize>,
}

impl<'a> NGramMultiset<'a> {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn count(&self, gram: &[String]) -> usize {
        self.counts.get(gram).copied().unwrap_or(0)
    }

    /// Number of n-grams counted with multiplicity.
    pub fn total(&self) -> usize {
        self.counts.values().sum()
    }

    /// Number of distinct n-grams.
    pub fn distinct(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&'a [String], usize)> + '_ {
        self.counts.iter().map(|(g, &c)| (*g, c))
    }

    /// Σ min(count_self(g), count_other(g)).
    pub fn clipped_overlap(&self, other: &NGramMultiset<'_>) -> usize {
        let (small, large) = if self.counts.len() <= other.counts.len() {
            (&self.counts, &other.counts)
        } else {
            (&other.counts, &self.counts)
        };
        small
            .iter()
            .map(|(g, &c)| c.min(large.get(g).copied().unwrap_or(0)))
            .sum()
    }
}

pub fn ngrams(tokens: &[String], n: usize) -> Result<NGramMultiset<'_>, RougeError> {
    if n == 0 {
        return Err(RougeError::InvalidN(n));
    }
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *counts.entry(w).or_insert(0) += 1;
        }
    }
    Ok(NGramMultiset { n, counts })
}

/// ROUGE-N over pre-tokenized inputs.
pub fn rouge_n_tokens(candidate: &[String], reference: &[String], n: usize) -> Result<RougeScore, RougeError> {
    let cand = ngrams(candidate, n)?;
    let refs = ngrams(reference, n)?;
    let overlap = cand.clipped_overlap(&refs) as f64;
    let ratio = |total: usize| if total == 0 { 0.0 } else { overlap / total as f64 };
    Ok(RougeScore::from_pr(n, ratio(cand.total()), ratio(refs.total())))
}

pub fn rouge_n(candidate: &str, reference: &str, n: usize) -> Result<RougeScore, RougeError> {
    rouge_n_tokens(&metric_tokens(candidate), &metric_tokens(reference), n)
}

/// Scores every pair for every order in `ns` and macro-averages precision,
/// recall and F1 independently.
pub fn corpus_rouge<C, R>(pairs: &[(C, R)], ns: &[usize]) -> Result<BTreeMap<usize, RougeScore>, RougeError>
where
    C: AsRef<str>,
    R: AsRef<str>,
{
    if pairs.is_empty() {
        return Err(RougeError::EmptyCorpus);
    }
    if let Some(&bad) = ns.iter().find(|&&n| n == 0) {
        return Err(RougeError::InvalidN(bad));
    }
    let tokenized: Vec<_> = pairs
        .iter()
        .map(|(c, r)| (metric_tokens(c.as_ref()), metric_tokens(r.as_ref())))
        .collect();
    let mut out = BTreeMap::new();
    for &n in ns {
        let per_record = tokenized
            .iter()
            .map(|(c, r)| rouge_n_tokens(c, r, n))
            .collect::<Result<Vec<_>, _>>()?;
        out.insert(n, average(n, &per_record));
    }
    Ok(out)
}

/// Macro average of already computed scores of one order.
pub fn average(n: usize, scores: &[RougeScore]) -> RougeScore {
    let len = scores.len().max(1) as f64;
    let (p, r, f) = scores
        .iter()
        .fold((0.0, 0.0, 0.0), |(p, r, f), s| (p + s.precision, r + s.recall, f + s.f1));
    RougeScore { n, precision: p / len, recall: r / len, f1: f / len }
}
