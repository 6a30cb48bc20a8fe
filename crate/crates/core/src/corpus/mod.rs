//! Document ingestion, text normalization, vocabulary pruning and the
//! date-based train/test split.

mod stem;
mod text;
mod vocab;

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use stem::stem;
pub use text::{analyze, default_analyzer, tokenize, Analyzer, TokenizedDoc};
pub use vocab::{build_vocabulary, Vocabulary, VocabularyParams};

/// One article, belonging to exactly one item (venue).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    pub venue_id: String,
    pub year: i32,
    #[serde(default)]
    pub title: String,
    #[serde(rename = "abstract", default)]
    pub abstract_text: String,
    #[serde(default)]
    pub keywords: Vec<String>,
}

impl Document {
    pub fn has_text(&self) -> bool {
        !self.title.trim().is_empty()
            || !self.abstract_text.trim().is_empty()
            || self.keywords.iter().any(|k| !k.trim().is_empty())
    }
}

/// A validated document collection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Corpus {
    documents: Vec<Document>,
    items: BTreeSet<String>,
    year_range: (i32, i32),
}

impl Corpus {
    /// Errors on an empty document list or a repeated `doc_id`.
    pub fn new(documents: Vec<Document>) -> Result<Self> {
        if documents.is_empty() {
            return Err(Error::EmptyCorpus { rejected: 0 });
        }
        let mut seen = HashSet::with_capacity(documents.len());
        for d in &documents {
            if !seen.insert(d.doc_id.as_str()) {
                return Err(Error::DuplicateDocId(d.doc_id.clone()));
            }
        }
        let items = documents.iter().map(|d| d.venue_id.clone()).collect();
        let min = documents.iter().map(|d| d.year).min().unwrap_or_default();
        let max = documents.iter().map(|d| d.year).max().unwrap_or_default();
        Ok(Corpus {
            documents,
            items,
            year_range: (min, max),
        })
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn items(&self) -> &BTreeSet<String> {
        &self.items
    }

    pub fn year_range(&self) -> (i32, i32) {
        self.year_range
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn get(&self, doc_id: &str) -> Option<&Document> {
        self.documents.iter().find(|d| d.doc_id == doc_id)
    }

    /// Number of documents per item.
    pub fn item_sizes(&self) -> BTreeMap<&str, usize> {
        let mut sizes = BTreeMap::new();
        for d in &self.documents {
            *sizes.entry(d.venue_id.as_str()).or_insert(0) += 1;
        }
        sizes
    }

    /// Keep only the items accepted by `keep(item_id, n_docs)`.
    pub fn retain_items(self, mut keep: impl FnMut(&str, usize) -> bool) -> Result<Self> {
        let sizes: BTreeMap<String, usize> = self.item_sizes().into_iter().map(|(k, v)| (k.to_owned(), v)).collect();
        let docs = self
            .documents
            .into_iter()
            .filter(|d| keep(&d.venue_id, sizes[&d.venue_id]))
            .collect();
        Corpus::new(docs)
    }

    pub fn tokenize_all(&self, analyzer: &Analyzer) -> Vec<TokenizedDoc> {
        use rayon::prelude::*;
        self.documents.par_iter().map(|d| analyzer.tokenize(d)).collect()
    }
}

/// A record that failed validation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rejection {
    /// 1-based line number in the input file.
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct LoadedCorpus {
    pub corpus: Corpus,
    pub rejected: Vec<Rejection>,
}

#[derive(Deserialize)]
struct RawRecord {
    doc_id: Option<String>,
    venue_id: Option<String>,
    year: Option<i64>,
    #[serde(default)]
    title: Option<String>,
    #[serde(rename = "abstract", default)]
    abstract_text: Option<String>,
    #[serde(default)]
    keywords: Option<Vec<String>>,
}

fn validate(raw: RawRecord) -> std::result::Result<Document, String> {
    let doc_id = raw.doc_id.filter(|s| !s.is_empty()).ok_or("missing doc_id")?;
    let venue_id = raw.venue_id.filter(|s| !s.is_empty()).ok_or("missing venue_id")?;
    let year = raw.year.ok_or("missing year")?;
    let year = i32::try_from(year).map_err(|_| format!("year {year} out of range"))?;
    let doc = Document {
        doc_id,
        venue_id,
        year,
        title: raw.title.unwrap_or_default(),
        abstract_text: raw.abstract_text.unwrap_or_default(),
        keywords: raw.keywords.unwrap_or_default(),
    };
    if !doc.has_text() {
        return Err("no title, abstract or keywords".into());
    }
    Ok(doc)
}

/// Parse line-delimited JSON records. Blank lines are skipped.
pub fn parse_corpus(reader: impl BufRead) -> Result<LoadedCorpus> {
    let mut documents = Vec::new();
    let mut rejected = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io("<corpus>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        let outcome = serde_json::from_str::<RawRecord>(&line)
            .map_err(|e| e.to_string())
            .and_then(validate);
        match outcome {
            Ok(doc) => documents.push(doc),
            Err(reason) => rejected.push(Rejection { line: i + 1, reason }),
        }
    }
    if documents.is_empty() {
        return Err(Error::EmptyCorpus {
            rejected: rejected.len(),
        });
    }
    for r in &rejected {
        log::warn!("rejected record at line {}: {}", r.line, r.reason);
    }
    let corpus = Corpus::new(documents)?;
    Ok(LoadedCorpus { corpus, rejected })
}

pub fn load_corpus(path: &Path) -> Result<LoadedCorpus> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_corpus(BufReader::new(file))
}

/// Write documents as line-delimited JSON records.
pub fn write_corpus(docs: &[Document], mut out: impl std::io::Write) -> std::io::Result<()> {
    for d in docs {
        serde_json::to_writer(&mut out, d)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Documents before `cutoff_year` train, the rest test.
pub fn split_train_test(corpus: &Corpus, cutoff_year: i32) -> Result<(Corpus, Corpus)> {
    let (min, max) = corpus.year_range();
    if cutoff_year < min || cutoff_year > max {
        return Err(Error::CutoffOutOfRange {
            cutoff: cutoff_year,
            min,
            max,
        });
    }
    let (train, test): (Vec<_>, Vec<_>) = corpus.documents().iter().cloned().partition(|d| d.year < cutoff_year);
    if train.is_empty() {
        return Err(Error::EmptyPartition("train"));
    }
    if test.is_empty() {
        return Err(Error::EmptyPartition("test"));
    }
    Ok((Corpus::new(train)?, Corpus::new(test)?))
}
