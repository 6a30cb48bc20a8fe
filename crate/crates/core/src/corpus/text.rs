use std::collections::HashSet;
use std::path::Path;
use std::sync::LazyLock;

use serde::{Deserialize, Serialize};

use super::stem::stem;
use super::Document;
use crate::error::{Error, Result};

const BUNDLED_STOPWORDS: &str = include_str!("stopwords.txt");

static DEFAULT_ANALYZER: LazyLock<Analyzer> = LazyLock::new(|| Analyzer::from_stopword_list(BUNDLED_STOPWORDS));

/// A document reduced to its normalized term stream.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizedDoc {
    pub doc_id: String,
    pub tokens: Vec<String>,
}

/// Lowercasing, alphanumeric splitting, stopword removal and Porter stemming.
#[derive(Debug, Clone)]
pub struct Analyzer {
    stopwords: HashSet<String>,
}

impl Analyzer {
    /// Parse a stopword list: one word per line, `#` starts a comment.
    pub fn from_stopword_list(text: &str) -> Self {
        let stopwords = text
            .lines()
            .map(|line| line.split('#').next().unwrap_or("").trim())
            .filter(|w| !w.is_empty())
            .map(str::to_lowercase)
            .collect();
        Analyzer { stopwords }
    }

    pub fn from_stopword_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::from_stopword_list(&text))
    }

    pub fn is_stopword(&self, word: &str) -> bool {
        self.stopwords.contains(word)
    }

    /// Normalize free text into stems, preserving order.
    pub fn analyze(&self, text: &str) -> Vec<String> {
        let mut out = Vec::new();
        self.analyze_into(text, &mut out);
        out
    }

    fn analyze_into(&self, text: &str, out: &mut Vec<String>) {
        for raw in text.split(|c: char| !c.is_alphanumeric()) {
            if raw.is_empty() {
                continue;
            }
            let lower = raw.to_lowercase();
            if self.is_stopword(&lower) {
                continue;
            }
            let stemmed = stem(&lower);
            // A stem can collide with a stopword ("doing" -> "do").
            if !self.is_stopword(&stemmed) {
                out.push(stemmed);
            }
        }
    }

    /// Title, abstract and keywords, in that order.
    pub fn tokenize(&self, doc: &Document) -> TokenizedDoc {
        let mut tokens = Vec::new();
        self.analyze_into(&doc.title, &mut tokens);
        self.analyze_into(&doc.abstract_text, &mut tokens);
        self.analyze_into(&doc.keywords.join(" "), &mut tokens);
        TokenizedDoc {
            doc_id: doc.doc_id.clone(),
            tokens,
        }
    }
}

impl Default for Analyzer {
    fn default() -> Self {
        DEFAULT_ANALYZER.clone()
    }
}

/// The shared analyzer backed by the bundled stopword list.
pub fn default_analyzer() -> &'static Analyzer {
    &DEFAULT_ANALYZER
}

/// Tokenize a document with the bundled stopword list.
pub fn tokenize(doc: &Document) -> TokenizedDoc {
    DEFAULT_ANALYZER.tokenize(doc)
}

/// Tokenize free text (e.g. a query) with the bundled stopword list.
pub fn analyze(text: &str) -> Vec<String> {
    DEFAULT_ANALYZER.analyze(text)
}
