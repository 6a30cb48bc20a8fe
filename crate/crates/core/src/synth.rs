//! Synthetic corpora with planted topics, per-period topic drift and
//! item-specific word preferences, plus the labels they were drawn from.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Zipf};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Document};
use crate::error::{Error, Result};
use crate::profiles::TimeGrid;

/// Words per title; the rest of a document goes into its abstract.
const TITLE_WORDS: usize = 8;
/// Stream offset separating preference draws from document draws.
const NICHE_STREAM: u64 = 1 << 48;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub n_items: usize,
    pub n_topics_true: usize,
    pub n_periods: usize,
    pub docs_per_item_per_period: usize,
    pub vocab_per_topic: usize,
    /// `drift[u][i]` lists the topics item `i` publishes on in period `u`.
    pub drift: Vec<Vec<Vec<usize>>>,
    /// Fraction of tokens drawn from a topic other than the document's.
    pub noise_rate: f64,
    pub seed: u64,
    pub doc_len: usize,
    pub start_year: i32,
    pub years_per_period: i32,
    pub zipf_exponent: f64,
    /// Fraction of on-topic tokens drawn from the item's own, per-period
    /// word ranking instead of the topic-wide one.
    pub niche_rate: f64,
}

impl SynthSpec {
    /// Item `i` covers topics `i + u, ..., i + u + topics_per_item - 1`
    /// (mod `n_topics`) in period `u`.
    pub fn rotating_drift(
        n_items: usize,
        n_topics: usize,
        n_periods: usize,
        topics_per_item: usize,
    ) -> Vec<Vec<Vec<usize>>> {
        (0..n_periods)
            .map(|u| {
                (0..n_items)
                    .map(|i| (0..topics_per_item).map(|j| (i + u + j) % n_topics.max(1)).collect())
                    .collect()
            })
            .collect()
    }

    /// One item per topic, one period, no noise and no item preferences.
    pub fn disjoint_topics(n_topics: usize, docs_per_topic: usize, seed: u64) -> Self {
        SynthSpec {
            n_items: n_topics,
            n_topics_true: n_topics,
            n_periods: 1,
            docs_per_item_per_period: docs_per_topic,
            vocab_per_topic: 50,
            drift: vec![(0..n_topics).map(|t| vec![t]).collect()],
            noise_rate: 0.0,
            seed,
            doc_len: 40,
            start_year: 2000,
            years_per_period: 1,
            zipf_exponent: 1.0,
            niche_rate: 0.0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Grid whose periods are exactly the generated ones.
    pub fn grid(&self) -> TimeGrid {
        let boundaries = (0..=self.n_periods as i32)
            .map(|u| self.start_year + u * self.years_per_period)
            .collect();
        TimeGrid::new(boundaries).expect("increasing boundaries")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        let counts = [
            ("n_items", self.n_items),
            ("n_topics_true", self.n_topics_true),
            ("n_periods", self.n_periods),
            ("docs_per_item_per_period", self.docs_per_item_per_period),
            ("vocab_per_topic", self.vocab_per_topic),
            ("doc_len", self.doc_len),
        ];
        if let Some((name, _)) = counts.iter().find(|(_, v)| *v < 1) {
            return bad(format!("{name} must be >= 1"));
        }
        if !(0.0..0.5).contains(&self.noise_rate) {
            return bad(format!("noise_rate must be in [0, 0.5), got {}", self.noise_rate));
        }
        if self.noise_rate > 0.0 && self.n_topics_true < 2 {
            return bad("noise needs at least two topics".into());
        }
        if !(0.0..=1.0).contains(&self.niche_rate) {
            return bad(format!("niche_rate must be in [0, 1], got {}", self.niche_rate));
        }
        if self.zipf_exponent.is_nan() || self.zipf_exponent < 0.0 {
            return bad("zipf_exponent must be >= 0".into());
        }
        if self.years_per_period < 1 {
            return bad("years_per_period must be >= 1".into());
        }
        if self.drift.len() != self.n_periods || self.drift.iter().any(|p| p.len() != self.n_items) {
            return bad("drift must list active topics for every period and item".into());
        }
        for topics in self.drift.iter().flatten() {
            if topics.is_empty() || topics.iter().any(|&t| t >= self.n_topics_true) {
                return bad("every item needs active topics below n_topics_true in every period".into());
            }
        }
        Ok(())
    }

    pub fn word(topic: usize, j: usize) -> String {
        format!("w{topic:02}x{j:03}")
    }

    pub fn item_id(i: usize) -> String {
        format!("v{i:02}")
    }
}

impl Default for SynthSpec {
    /// Twenty items over four drifting topics and three two-year periods.
    fn default() -> Self {
        SynthSpec {
            n_items: 20,
            n_topics_true: 4,
            n_periods: 3,
            docs_per_item_per_period: 20,
            vocab_per_topic: 150,
            drift: SynthSpec::rotating_drift(20, 4, 3, 2),
            noise_rate: 0.1,
            seed: 0,
            doc_len: 40,
            start_year: 2000,
            years_per_period: 2,
            zipf_exponent: 1.0,
            niche_rate: 0.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocLabel {
    pub doc_id: String,
    pub item_id: String,
    pub topic: usize,
    pub period: usize,
}

/// True topic and period of every generated document, in corpus order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub labels: Vec<DocLabel>,
}

impl GroundTruth {
    pub fn get(&self, doc_id: &str) -> Option<&DocLabel> {
        self.labels.iter().find(|l| l.doc_id == doc_id)
    }

    pub fn write_jsonl(&self, mut out: impl Write) -> std::io::Result<()> {
        for l in &self.labels {
            serde_json::to_writer(&mut out, l)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

/// Draw a corpus from `spec`. Deterministic in `spec.seed`.
pub fn generate(spec: &SynthSpec) -> Result<(Corpus, GroundTruth)> {
    spec.validate()?;
    let (n_items, n_topics, n_periods) = (spec.n_items, spec.n_topics_true, spec.n_periods);
    let zipf = Zipf::new(spec.vocab_per_topic as f64, spec.zipf_exponent)
        .map_err(|e| Error::InvalidConfig(format!("zipf: {e}")))?;

    // niche[(i * n_topics + t) * n_periods + u] reorders topic t's words for item i in period u.
    let niche: Vec<Vec<usize>> = (0..n_items * n_topics * n_periods)
        .map(|slot| {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            rng.set_stream(NICHE_STREAM + slot as u64);
            let mut order: Vec<usize> = (0..spec.vocab_per_topic).collect();
            order.shuffle(&mut rng);
            order
        })
        .collect();

    let per_period = spec.docs_per_item_per_period;
    let generated: Vec<(Document, DocLabel)> = (0..n_periods * n_items * per_period)
        .into_par_iter()
        .map(|slot| {
            let (u, rest) = (slot / (n_items * per_period), slot % (n_items * per_period));
            let (i, n) = (rest / per_period, rest % per_period);
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            rng.set_stream(slot as u64);

            let active = &spec.drift[u][i];
            let topic = active[rng.random_range(0..active.len())];
            let order = &niche[(i * n_topics + topic) * n_periods + u];
            let words: Vec<String> = (0..spec.doc_len)
                .map(|_| {
                    let rank = (zipf.sample(&mut rng) as usize).clamp(1, spec.vocab_per_topic) - 1;
                    if rng.random::<f64>() < spec.noise_rate {
                        let other = (topic + rng.random_range(1..n_topics)) % n_topics;
                        SynthSpec::word(other, rank)
                    } else if rng.random::<f64>() < spec.niche_rate {
                        SynthSpec::word(topic, order[rank])
                    } else {
                        SynthSpec::word(topic, rank)
                    }
                })
                .collect();
            let split = TITLE_WORDS.min(words.len());
            let doc_id = format!("{}-p{u}-{n:04}", SynthSpec::item_id(i));
            let doc = Document {
                doc_id: doc_id.clone(),
                venue_id: SynthSpec::item_id(i),
                year: spec.start_year + u as i32 * spec.years_per_period + rng.random_range(0..spec.years_per_period),
                title: words[..split].join(" "),
                abstract_text: words[split..].join(" "),
                keywords: vec![],
            };
            let label = DocLabel {
                doc_id,
                item_id: SynthSpec::item_id(i),
                topic,
                period: u,
            };
            (doc, label)
        })
        .collect();
    let (docs, labels): (Vec<_>, Vec<_>) = generated.into_iter().unzip();
    Ok((Corpus::new(docs)?, GroundTruth { labels }))
}
