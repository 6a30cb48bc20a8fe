//! LDA topic discovery by collapsed Gibbs sampling, and argmax assignment
//! of documents to their most probable topic.

mod gibbs;

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{TokenizedDoc, Vocabulary};
use crate::error::{Error, Result};

pub use gibbs::GibbsSampler;

const MODEL_TAG: &[u8; 8] = b"VRTOPIC\0";
const MODEL_VERSION: u32 = 1;

const FOLD_IN_SWEEPS: usize = 100;
const FOLD_IN_BURN_IN: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LdaConfig {
    pub k: usize,
    /// Symmetric document-topic prior.
    pub alpha: f64,
    /// Symmetric topic-term prior.
    pub beta: f64,
    /// Total Gibbs sweeps, burn-in included.
    pub iterations: usize,
    pub burn_in: usize,
    /// Estimates average the last this-many sweeps (never burn-in ones).
    pub averaging_window: usize,
    pub seed: u64,
}

impl LdaConfig {
    /// `alpha = 50/k`, `beta = 0.01`, 1000 sweeps with 200 burn-in,
    /// estimates averaged over the last 50.
    pub fn new(k: usize, seed: u64) -> Self {
        LdaConfig {
            k,
            alpha: 50.0 / k.max(1) as f64,
            beta: 0.01,
            iterations: 1000,
            burn_in: 200,
            averaging_window: 50,
            seed,
        }
    }

    pub fn with_iterations(mut self, iterations: usize, burn_in: usize) -> Self {
        self.iterations = iterations;
        self.burn_in = burn_in;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_owned()));
        if self.k < 1 {
            return bad("k must be >= 1");
        }
        if [self.alpha, self.beta].iter().any(|p| p.is_nan() || *p <= 0.0) {
            return bad("alpha and beta must be > 0");
        }
        if self.iterations <= self.burn_in {
            return bad("iterations must exceed burn_in");
        }
        if self.averaging_window < 1 {
            return bad("averaging_window must be >= 1");
        }
        Ok(())
    }
}

/// A fitted topic model over a fixed document set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicModel {
    config: LdaConfig,
    terms: Vec<String>,
    term_given_topic: Vec<Vec<f64>>,
    doc_ids: Vec<String>,
    topic_given_doc: Vec<Vec<f64>>,
    assignment: Vec<usize>,
    /// Documents with no in-vocabulary token; their mixture is uniform.
    empty_docs: Vec<String>,
    #[serde(skip)]
    doc_index: HashMap<String, usize>,
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

fn normalize(v: &mut [f64]) {
    let total: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= total);
}

/// Fit LDA on `docs`, restricted to `vocab`.
pub fn fit_lda(docs: &[TokenizedDoc], vocab: &Vocabulary, config: &LdaConfig) -> Result<TopicModel> {
    config.validate()?;
    let encoded: Vec<Vec<u32>> = docs.iter().map(|d| vocab.encode(&d.tokens)).collect();
    if encoded.iter().all(Vec::is_empty) {
        return Err(Error::AllDocumentsEmpty);
    }
    let k = config.k;
    let is_empty: Vec<bool> = encoded.iter().map(Vec::is_empty).collect();
    let empty_docs: Vec<String> = docs
        .iter()
        .zip(&is_empty)
        .filter(|(_, &e)| e)
        .map(|(d, _)| d.doc_id.clone())
        .collect();
    if !empty_docs.is_empty() {
        log::warn!("{} documents have no in-vocabulary tokens", empty_docs.len());
    }

    let mut sampler = GibbsSampler::new(encoded, vocab.len(), k, config.alpha, config.beta, config.seed);
    let window = config.averaging_window.min(config.iterations - config.burn_in);
    let mut term_given_topic = vec![vec![0.0; vocab.len()]; k];
    let mut topic_given_doc = vec![vec![0.0; k]; docs.len()];
    for sweep in 0..config.iterations {
        sampler.sweep();
        if sweep >= config.iterations - window {
            for (acc, row) in term_given_topic.iter_mut().zip(sampler.term_given_topic()) {
                acc.iter_mut().zip(row).for_each(|(a, p)| *a += p);
            }
            for (d, acc) in topic_given_doc.iter_mut().enumerate() {
                acc.iter_mut()
                    .zip(sampler.topic_given_doc(d))
                    .for_each(|(a, p)| *a += p);
            }
        }
    }
    term_given_topic.iter_mut().for_each(|r| normalize(r));
    topic_given_doc.iter_mut().for_each(|r| normalize(r));
    let uniform = vec![1.0 / k as f64; k];
    for (p, _) in topic_given_doc.iter_mut().zip(&is_empty).filter(|(_, &e)| e) {
        p.clone_from(&uniform);
    }
    let assignment = topic_given_doc.iter().map(|p| argmax(p)).collect();

    Ok(TopicModel::from_parts(
        *config,
        vocab.terms().to_vec(),
        term_given_topic,
        docs.iter().map(|d| d.doc_id.clone()).collect(),
        topic_given_doc,
        assignment,
        empty_docs,
    ))
}

impl TopicModel {
    fn from_parts(
        config: LdaConfig,
        terms: Vec<String>,
        term_given_topic: Vec<Vec<f64>>,
        doc_ids: Vec<String>,
        topic_given_doc: Vec<Vec<f64>>,
        assignment: Vec<usize>,
        empty_docs: Vec<String>,
    ) -> Self {
        let mut model = TopicModel {
            config,
            terms,
            term_given_topic,
            doc_ids,
            topic_given_doc,
            assignment,
            empty_docs,
            doc_index: HashMap::new(),
        };
        model.rebuild_index();
        model
    }

    fn rebuild_index(&mut self) {
        self.doc_index = self.doc_ids.iter().enumerate().map(|(i, d)| (d.clone(), i)).collect();
    }

    /// Build a model from explicit per-document topic mixtures.
    ///
    /// The model carries no term distributions, so it can assign its own
    /// documents but cannot fold in new ones.
    pub fn from_mixtures(doc_ids: Vec<String>, topic_given_doc: Vec<Vec<f64>>) -> Result<Self> {
        let k = topic_given_doc.first().map_or(0, Vec::len);
        if k == 0 || topic_given_doc.iter().any(|p| p.len() != k) || doc_ids.len() != topic_given_doc.len() {
            return Err(Error::InvalidConfig(
                "mixtures must be non-empty and of equal length".into(),
            ));
        }
        let assignment = topic_given_doc.iter().map(|p| argmax(p)).collect();
        Ok(Self::from_parts(
            LdaConfig::new(k, 0),
            vec![],
            vec![vec![]; k],
            doc_ids,
            topic_given_doc,
            assignment,
            vec![],
        ))
    }

    pub fn k(&self) -> usize {
        self.config.k
    }

    pub fn config(&self) -> &LdaConfig {
        &self.config
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn term_given_topic(&self) -> &[Vec<f64>] {
        &self.term_given_topic
    }

    pub fn doc_ids(&self) -> &[String] {
        &self.doc_ids
    }

    pub fn topic_given_doc(&self) -> &[Vec<f64>] {
        &self.topic_given_doc
    }

    /// Argmax topic per document, aligned with [`doc_ids`](Self::doc_ids).
    pub fn assignments(&self) -> &[usize] {
        &self.assignment
    }

    pub fn empty_docs(&self) -> &[String] {
        &self.empty_docs
    }

    pub fn contains(&self, doc_id: &str) -> bool {
        self.doc_index.contains_key(doc_id)
    }

    pub fn mixture(&self, doc_id: &str) -> Result<&[f64]> {
        self.doc_index
            .get(doc_id)
            .map(|&i| self.topic_given_doc[i].as_slice())
            .ok_or_else(|| Error::UnknownDocument(doc_id.to_owned()))
    }

    /// Most probable topic of a fitted document; ties go to the lowest index.
    pub fn assign_topic(&self, doc_id: &str) -> Result<usize> {
        self.doc_index
            .get(doc_id)
            .map(|&i| self.assignment[i])
            .ok_or_else(|| Error::UnknownDocument(doc_id.to_owned()))
    }

    /// Estimate the topic mixture of an unseen document by Gibbs fold-in
    /// against the frozen topic-term distributions.
    pub fn infer_topic_mixture(&self, doc: &TokenizedDoc) -> Result<Vec<f64>> {
        let index: HashMap<&str, u32> = self
            .terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.as_str(), i as u32))
            .collect();
        let words: Vec<u32> = doc
            .tokens
            .iter()
            .filter_map(|t| index.get(t.as_str()).copied())
            .collect();
        if words.is_empty() {
            return Err(Error::NoVocabularyTokens);
        }
        Ok(gibbs::fold_in(
            &words,
            &self.term_given_topic,
            self.config.alpha,
            FOLD_IN_SWEEPS,
            FOLD_IN_BURN_IN,
            self.config.seed,
        ))
    }

    /// Most probable terms of a topic, for inspection.
    pub fn top_terms(&self, topic: usize, n: usize) -> Vec<(&str, f64)> {
        let mut terms: Vec<(&str, f64)> = self.term_given_topic[topic]
            .iter()
            .enumerate()
            .map(|(i, &p)| (self.terms[i].as_str(), p))
            .collect();
        terms.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        terms.truncate(n);
        terms
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::artifact::save(path, MODEL_TAG, MODEL_VERSION, self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut model: TopicModel = crate::artifact::load(path, MODEL_TAG, MODEL_VERSION)?;
        model.rebuild_index();
        Ok(model)
    }
}
