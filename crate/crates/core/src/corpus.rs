//! Dataset ingestion and text cleaning.
//!
//! Files follow the shared-task layout: `id,Link,Heading,Article,Summary`
//! for training data and `id,Link,Heading,Article` for validation and test
//! data. Fields may contain commas and newlines and use standard CSV
//! quoting.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::segment::{split_sentences, tokenize_words};
use crate::text;
use crate::Language;

pub const COL_ID: &str = "id";
pub const COL_LINK: &str = "Link";
pub const COL_HEADING: &str = "Heading";
pub const COL_ARTICLE: &str = "Article";
pub const COL_SUMMARY: &str = "Summary";

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("required column `{0}` is missing from the header")]
    MissingColumn(&'static str),
    #[error("row {row}: id is empty")]
    EmptyId { row: usize },
    #[error("row {row}: duplicate id `{id}`")]
    DuplicateId { id: String, row: usize },
    #[error("row {row} (id `{id}`): article is empty")]
    EmptyArticle { id: String, row: usize },
    #[error("row {row} (id `{id}`): training rows need a nonempty summary")]
    MissingSummary { id: String, row: usize },
    #[error("split has no records")]
    EmptySplit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitKind {
    Train,
    Validation,
    Test,
}

impl SplitKind {
    pub fn requires_summary(self) -> bool {
        self == SplitKind::Train
    }
}

impl fmt::Display for SplitKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SplitKind::Train => "train",
            SplitKind::Validation => "validation",
            SplitKind::Test => "test",
        })
    }
}

impl FromStr for SplitKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "train" => Ok(SplitKind::Train),
            "validation" | "val" | "dev" => Ok(SplitKind::Validation),
            "test" => Ok(SplitKind::Test),
            other => Err(format!("unknown split `{other}` (expected train, validation or test)")),
        }
    }
}

/// One dataset row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArticleRecord {
    pub id: String,
    pub link: String,
    pub heading: String,
    pub article: String,
    /// Gold extractive summary; absent for unlabeled splits.
    pub summary: Option<String>,
}

impl ArticleRecord {
    pub fn new(id: impl Into<String>, article: impl Into<String>, summary: Option<String>) -> Self {
        ArticleRecord {
            id: id.into(),
            link: String::new(),
            heading: String::new(),
            article: article.into(),
            summary,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetSplit {
    pub kind: SplitKind,
    pub language: Language,
    pub records: Vec<ArticleRecord>,
}

impl DatasetSplit {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&ArticleRecord> {
        self.records.iter().find(|r| r.id == id)
    }
}

/// Loads a CSV split from disk. See [`read_csv`].
pub fn load_csv(
    path: impl AsRef<Path>,
    kind: SplitKind,
    language: Language,
) -> Result<DatasetSplit, CorpusError> {
    read_csv(File::open(path)?, kind, language)
}

/// Parses a CSV split, validating the header and every row.
///
/// Text fields are NFC-normalized. Row numbers in errors are 1-based data
/// rows (the header is row 0).
pub fn read_csv<R: Read>(
    reader: R,
    kind: SplitKind,
    language: Language,
) -> Result<DatasetSplit, CorpusError> {
    let mut rdr = csv::ReaderBuilder::new().flexible(false).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let position = |name: &str| headers.iter().position(|h| h.trim_start_matches('\u{feff}') == name);

    let id_col = position(COL_ID).ok_or(CorpusError::MissingColumn(COL_ID))?;
    let article_col = position(COL_ARTICLE).ok_or(CorpusError::MissingColumn(COL_ARTICLE))?;
    let summary_col = position(COL_SUMMARY);
    if kind.requires_summary() && summary_col.is_none() {
        return Err(CorpusError::MissingColumn(COL_SUMMARY));
    }
    let link_col = position(COL_LINK);
    let heading_col = position(COL_HEADING);

    let mut seen = HashSet::new();
    let mut records = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row?;
        let row_no = i + 1;
        let field = |col: Option<usize>| col.and_then(|c| row.get(c)).map(text::nfc).unwrap_or_default();

        let id = field(Some(id_col)).trim().to_string();
        if id.is_empty() {
            return Err(CorpusError::EmptyId { row: row_no });
        }
        if !seen.insert(id.clone()) {
            return Err(CorpusError::DuplicateId { id, row: row_no });
        }
        let article = field(Some(article_col));
        if article.trim().is_empty() {
            return Err(CorpusError::EmptyArticle { id, row: row_no });
        }
        let summary = Some(field(summary_col)).filter(|s| !s.trim().is_empty());
        if kind.requires_summary() && summary.is_none() {
            return Err(CorpusError::MissingSummary { id, row: row_no });
        }
        records.push(ArticleRecord {
            id,
            link: field(link_col),
            heading: field(heading_col),
            article,
            summary,
        });
    }
    Ok(DatasetSplit { kind, language, records })
}

/// Writes records in the same CSV layout [`read_csv`] accepts.
///
/// The `Summary` column is written when `with_summary` is set; missing
/// summaries become empty fields.
pub fn write_csv<W: Write>(
    writer: W,
    records: &[ArticleRecord],
    with_summary: bool,
) -> Result<(), CorpusError> {
    let mut wtr = csv::Writer::from_writer(writer);
    if with_summary {
        wtr.write_record([COL_ID, COL_LINK, COL_HEADING, COL_ARTICLE, COL_SUMMARY])?;
    } else {
        wtr.write_record([COL_ID, COL_LINK, COL_HEADING, COL_ARTICLE])?;
    }
    for r in records {
        if with_summary {
            let summary = r.summary.as_deref().unwrap_or("");
            wtr.write_record([&r.id, &r.link, &r.heading, &r.article, summary])?;
        } else {
            wtr.write_record([&r.id, &r.link, &r.heading, &r.article])?;
        }
    }
    wtr.flush()?;
    Ok(())
}

pub fn save_csv(path: impl AsRef<Path>, split: &DatasetSplit) -> Result<(), CorpusError> {
    let with_summary =
        split.kind.requires_summary() || split.records.iter().any(|r| r.summary.is_some());
    write_csv(File::create(path)?, &split.records, with_summary)
}

/// A set of stopwords for one language.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Stopwords(HashSet<String>);

impl Stopwords {
    /// The list shipped with the crate. The Gujarati list is empty.
    pub fn builtin(language: Language) -> Self {
        let data = match language {
            Language::English => include_str!("../data/stopwords/english.txt"),
            Language::Hindi => include_str!("../data/stopwords/hindi.txt"),
            Language::Gujarati => include_str!("../data/stopwords/gujarati.txt"),
        };
        Self::parse(data)
    }

    pub fn from_file(path: impl AsRef<Path>) -> std::io::Result<Self> {
        Ok(Self::parse(&std::fs::read_to_string(path)?))
    }

    /// One word per line; blank lines and `#` comments are skipped.
    pub fn parse(data: &str) -> Self {
        Stopwords(
            data.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(text::nfc)
                .collect(),
        )
    }

    pub fn contains(&self, word: &str) -> bool {
        self.0.contains(word)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl<S: Into<String>> FromIterator<S> for Stopwords {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        Stopwords(iter.into_iter().map(Into::into).collect())
    }
}

/// Cleaning switches. The default only normalizes Unicode and whitespace,
/// which is what generation inputs get.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CleanOptions {
    pub lowercase: bool,
    pub strip_punctuation: bool,
    /// Stopword removal is on exactly when a list is given.
    pub stopwords: Option<Stopwords>,
}

impl CleanOptions {
    /// Lowercase and strip punctuation; used when matching sentences.
    pub fn matching() -> Self {
        CleanOptions { lowercase: true, strip_punctuation: true, stopwords: None }
    }

    /// Everything on, with the built-in stopword list for `language`.
    pub fn aggressive(language: Language) -> Self {
        CleanOptions {
            lowercase: true,
            strip_punctuation: true,
            stopwords: Some(Stopwords::builtin(language)),
        }
    }
}

/// Deterministic cleaning: NFC, lowercase, strip punctuation, drop
/// stopwords, collapse whitespace (in that order, each step optional
/// except the first and last).
pub fn clean_text(input: &str, opts: &CleanOptions) -> String {
    let mut s = text::nfc(input);
    if opts.lowercase {
        s = s.to_lowercase();
    }
    if opts.strip_punctuation {
        s = text::strip_punctuation(&s);
    }
    match &opts.stopwords {
        Some(stop) => s
            .split_whitespace()
            .filter(|w| !stop.contains(w))
            .collect::<Vec<_>>()
            .join(" "),
        None => text::collapse_whitespace(&s),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusStats {
    pub records: usize,
    pub mean_sentences: f64,
    pub mean_article_words: f64,
    /// Number of records carrying a gold summary.
    pub summaries: usize,
    pub mean_summary_sentences: Option<f64>,
    pub mean_summary_words: Option<f64>,
}

pub fn corpus_stats(split: &DatasetSplit) -> Result<CorpusStats, CorpusError> {
    if split.is_empty() {
        return Err(CorpusError::EmptySplit);
    }
    let n = split.len() as f64;
    let lang = split.language;
    let mut sentences = 0usize;
    let mut words = 0usize;
    let mut sum_sentences = 0usize;
    let mut sum_words = 0usize;
    let mut summaries = 0usize;
    for r in &split.records {
        sentences += split_sentences(&r.article, lang).len();
        words += tokenize_words(&r.article).len();
        if let Some(s) = &r.summary {
            summaries += 1;
            sum_sentences += split_sentences(s, lang).len();
            sum_words += tokenize_words(s).len();
        }
    }
    let mean = |total: usize| (summaries > 0).then(|| total as f64 / summaries as f64);
    Ok(CorpusStats {
        records: split.len(),
        mean_sentences: sentences as f64 / n,
        mean_article_words: words as f64 / n,
        summaries,
        mean_summary_sentences: mean(sum_sentences),
        mean_summary_words: mean(sum_words),
    })
}

/// Reads an `id,Summary` file (extra columns ignored) into a lookup table.
pub fn load_summaries(path: impl AsRef<Path>) -> Result<HashMap<String, String>, CorpusError> {
    let mut rdr = csv::Reader::from_reader(File::open(path)?);
    let headers = rdr.headers()?.clone();
    let id_col = headers.iter().position(|h| h == COL_ID).ok_or(CorpusError::MissingColumn(COL_ID))?;
    let sum_col = headers
        .iter()
        .position(|h| h == COL_SUMMARY)
        .ok_or(CorpusError::MissingColumn(COL_SUMMARY))?;
    let mut out = HashMap::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row?;
        let id = row.get(id_col).unwrap_or_default().trim().to_string();
        if id.is_empty() {
            return Err(CorpusError::EmptyId { row: i + 1 });
        }
        let summary = text::nfc(row.get(sum_col).unwrap_or_default());
        if out.insert(id.clone(), summary).is_some() {
            return Err(CorpusError::DuplicateId { id, row: i + 1 });
        }
    }
    Ok(out)
}

/// Writes `id,Summary` rows.
pub fn write_summaries<W: Write>(writer: W, rows: &[(String, String)]) -> Result<(), CorpusError> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record([COL_ID, COL_SUMMARY])?;
    for (id, summary) in rows {
        wtr.write_record([id, summary])?;
    }
    wtr.flush()?;
    Ok(())
}
