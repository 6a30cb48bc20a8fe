use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::TokenizedDoc;
use crate::error::{Error, Result};

/// Pruning thresholds for the LDA input vocabulary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VocabularyParams {
    /// Minimum number of training documents a term must occur in (inclusive).
    pub min_df: usize,
    /// Maximum fraction of training documents a term may occur in (inclusive).
    pub max_df_ratio: f64,
    /// Keep at most this many terms, by descending collection frequency.
    pub max_terms: usize,
}

impl Default for VocabularyParams {
    fn default() -> Self {
        VocabularyParams {
            min_df: 750,
            max_df_ratio: 0.90,
            max_terms: 5000,
        }
    }
}

impl VocabularyParams {
    pub fn validate(&self) -> Result<()> {
        if self.min_df < 1 {
            return Err(Error::InvalidConfig("min_df must be >= 1".into()));
        }
        if !(self.max_df_ratio > 0.0 && self.max_df_ratio <= 1.0) {
            return Err(Error::InvalidConfig("max_df_ratio must be in (0, 1]".into()));
        }
        if self.max_terms < 1 {
            return Err(Error::InvalidConfig("max_terms must be >= 1".into()));
        }
        Ok(())
    }
}

/// The pruned term dictionary used as topic-model input.
///
/// Term ids follow lexicographic term order. `total_tokens` and
/// `full_vocabulary_size` describe the unpruned token stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vocabulary {
    terms: HashMap<String, u32>,
    id_to_term: Vec<String>,
    doc_freq: Vec<u32>,
    coll_freq: Vec<u64>,
    n_docs: usize,
    total_tokens: u64,
    full_vocabulary_size: usize,
}

impl Vocabulary {
    pub fn id(&self, term: &str) -> Option<u32> {
        self.terms.get(term).copied()
    }

    pub fn term(&self, id: u32) -> &str {
        &self.id_to_term[id as usize]
    }

    pub fn terms(&self) -> &[String] {
        &self.id_to_term
    }

    pub fn contains(&self, term: &str) -> bool {
        self.terms.contains_key(term)
    }

    pub fn len(&self) -> usize {
        self.id_to_term.len()
    }

    pub fn is_empty(&self) -> bool {
        self.id_to_term.is_empty()
    }

    pub fn doc_freq(&self, id: u32) -> u32 {
        self.doc_freq[id as usize]
    }

    pub fn coll_freq(&self, id: u32) -> u64 {
        self.coll_freq[id as usize]
    }

    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    /// Token count of the full, unpruned training stream.
    pub fn total_tokens(&self) -> u64 {
        self.total_tokens
    }

    pub fn full_vocabulary_size(&self) -> usize {
        self.full_vocabulary_size
    }

    /// Map tokens to ids, dropping out-of-vocabulary terms.
    pub fn encode(&self, tokens: &[String]) -> Vec<u32> {
        tokens.iter().filter_map(|t| self.id(t)).collect()
    }
}

pub fn build_vocabulary(train: &[TokenizedDoc], params: VocabularyParams) -> Result<Vocabulary> {
    params.validate()?;
    let mut df: HashMap<&str, u32> = HashMap::new();
    let mut cf: HashMap<&str, u64> = HashMap::new();
    let mut total_tokens = 0u64;
    for doc in train {
        let mut seen = HashSet::new();
        for t in &doc.tokens {
            *cf.entry(t).or_insert(0) += 1;
            if seen.insert(t.as_str()) {
                *df.entry(t).or_insert(0) += 1;
            }
        }
        total_tokens += doc.tokens.len() as u64;
    }
    let full_vocabulary_size = df.len();
    let max_df = params.max_df_ratio * train.len() as f64;

    let mut kept: Vec<(&str, u32, u64)> = df
        .iter()
        .filter(|(_, &d)| d as usize >= params.min_df && (d as f64) <= max_df + 1e-9)
        .map(|(&t, &d)| (t, d, cf[t]))
        .collect();
    if kept.len() > params.max_terms {
        kept.sort_unstable_by(|a, b| b.2.cmp(&a.2).then_with(|| a.0.cmp(b.0)));
        kept.truncate(params.max_terms);
    }
    if kept.is_empty() {
        return Err(Error::VocabularyEmpty {
            min_df: params.min_df,
            max_df_ratio: params.max_df_ratio,
            max_terms: params.max_terms,
        });
    }
    kept.sort_unstable_by(|a, b| a.0.cmp(b.0));

    let mut vocab = Vocabulary {
        terms: HashMap::with_capacity(kept.len()),
        id_to_term: Vec::with_capacity(kept.len()),
        doc_freq: Vec::with_capacity(kept.len()),
        coll_freq: Vec::with_capacity(kept.len()),
        n_docs: train.len(),
        total_tokens,
        full_vocabulary_size,
    };
    for (id, (term, d, c)) in kept.into_iter().enumerate() {
        vocab.terms.insert(term.to_owned(), id as u32);
        vocab.id_to_term.push(term.to_owned());
        vocab.doc_freq.push(d);
        vocab.coll_freq.push(c);
    }
    Ok(vocab)
}
