//! Toolkit for multilingual (English, Hindi, Gujarati) news-article
//! summarization experiments.
//!
//! The crate is organised as a pipeline:
//!
//! * [`corpus`] loads and cleans CSV datasets,
//! * [`segment`] splits sentences and words and pads id batches,
//! * [`augment`] builds right-shifted and noisy copies and extractive labels,
//! * [`backends`] defines the summarizer contract, hyperparameter presets,
//!   a deterministic lead baseline and the out-of-process adapter protocol,
//! * [`extractive`] scores and selects sentences,
//! * [`crosslingual`] runs translate, map, summarize and back-map,
//! * [`rouge`] scores summaries,
//! * [`experiments`] ties everything into persisted, reportable runs.

pub mod augment;
pub mod backends;
pub mod corpus;
pub mod crosslingual;
pub mod experiments;
pub mod extractive;
pub mod lang;
pub mod rouge;
pub mod segment;
pub mod text;

pub use lang::Language;
