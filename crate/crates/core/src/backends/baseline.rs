use std::collections::BTreeSet;

use super::{BackendError, Capabilities, GenerationParams, ModelHandle, SummarizerBackend, SummarizerSpec};
use crate::corpus::DatasetSplit;
use crate::segment::{split_sentences, tokenize_words};
use crate::Language;

/// Leading sentences of the article within a word budget.
///
/// Whole sentences are taken in order while the running word count stays
/// within `max_tokens`. If even the first sentence is too long, its first
/// `max_tokens` words are returned instead.
pub fn lead_baseline(article: &str, params: &GenerationParams, language: Language) -> Result<String, BackendError> {
    let sentences = split_sentences(article, language);
    if sentences.is_empty() {
        return Err(BackendError::EmptyInput);
    }
    let budget = params.max_tokens as usize;
    let mut used = 0;
    let mut taken = Vec::new();
    for sentence in sentences.iter() {
        let words = tokenize_words(sentence).len();
        if used + words > budget {
            break;
        }
        used += words;
        taken.push(sentence);
    }
    if taken.is_empty() {
        let first = sentences.iter().next().expect("nonempty");
        return Ok(tokenize_words(first)[..budget].join(" "));
    }
    Ok(taken.join(" "))
}

#[derive(Debug, Clone)]
pub struct LeadBaseline {
    language: Language,
}

impl LeadBaseline {
    pub const NAME: &'static str = "lead-baseline";

    pub fn new(language: Language) -> Self {
        LeadBaseline { language }
    }
}

impl SummarizerBackend for LeadBaseline {
    fn name(&self) -> &str {
        Self::NAME
    }

    fn capabilities(&self) -> Capabilities {
        Capabilities {
            trainable: false,
            languages: BTreeSet::from(Language::ALL),
            max_parallel: usize::MAX,
        }
    }

    fn base_handle(&self) -> ModelHandle {
        ModelHandle {
            backend: Self::NAME.into(),
            model_id: format!("{}:{}", Self::NAME, self.language),
            checkpoint: None,
            spec_hash: None,
        }
    }

    fn train(&self, _: &DatasetSplit, _: &SummarizerSpec) -> Result<ModelHandle, BackendError> {
        Err(BackendError::InvalidSpec("the lead baseline has nothing to train".into()))
    }

    fn generate(&self, _: &ModelHandle, article: &str, params: &GenerationParams) -> Result<String, BackendError> {
        lead_baseline(article, params, self.language)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backends::summarize;
    use proptest::prelude::*;

    const FIVE_FIVE_FIVE: &str = "a b c d e. f g h i j. k l m n o.";

    fn lead(article: &str, max_tokens: u32) -> String {
        lead_baseline(article, &GenerationParams::new(max_tokens), Language::English).unwrap()
    }

    #[test]
    fn budget_examples() {
        assert_eq!(lead(FIVE_FIVE_FIVE, 12), "a b c d e. f g h i j.");
        assert_eq!(lead(FIVE_FIVE_FIVE, 3), "a b c");
        assert_eq!(lead("Just one sentence here.", 1000), "Just one sentence here.");
        assert_eq!(lead(FIVE_FIVE_FIVE, 1000), FIVE_FIVE_FIVE);
    }

    #[test]
    fn first_sentence_exactly_fits() {
        assert_eq!(lead(FIVE_FIVE_FIVE, 5), "a b c d e.");
        assert_eq!(lead(FIVE_FIVE_FIVE, 9), "a b c d e.");
    }

    #[test]
    fn empty_input() {
        assert_eq!(
            lead_baseline(" \n", &GenerationParams::new(5), Language::Hindi),
            Err(BackendError::EmptyInput)
        );
    }

    #[test]
    fn backend_wrapper_matches_function() {
        let b = LeadBaseline::new(Language::English);
        let params = GenerationParams::new(12);
        let out = summarize(&b, &b.base_handle(), FIVE_FIVE_FIVE, &params).unwrap();
        assert_eq!(out, "a b c d e. f g h i j.");
        assert_eq!(out, summarize(&b, &b.base_handle(), FIVE_FIVE_FIVE, &params).unwrap());
    }

    fn article() -> impl Strategy<Value = String> {
        proptest::collection::vec(proptest::collection::vec("[a-e]{1,3}", 1..8), 1..6)
            .prop_map(|ss| ss.into_iter().map(|w| format!("{}.", w.join(" "))).collect::<Vec<_>>().join(" "))
    }

    proptest! {
        #[test]
        fn output_is_a_prefix(text in article(), budget in 1u32..30) {
            let out = lead(&text, budget);
            let words = tokenize_words(&out);
            let article_words = tokenize_words(&text);
            prop_assert!(words.len() <= budget as usize);
            prop_assert!(!words.is_empty());
            prop_assert!(text.starts_with(&out));
            prop_assert_eq!(&article_words[..words.len()], words.as_slice());
        }
    }
}
