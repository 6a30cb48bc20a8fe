//! The seven ways of grouping an item's training documents into
//! subprofiles: Mono, Atomic, Top, Temp, TopTemp, TempTop and Random.
//!
//! Every builder produces a partition of the training set: each document
//! lands in exactly one subprofile, and a subprofile never mixes items.
//! Empty (item, topic, period) groups produce no subprofile at all.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{build_vocabulary, Corpus, Document, TokenizedDoc, VocabularyParams};
use crate::error::{Error, Result};
use crate::topicmodel::{fit_lda, LdaConfig, TopicModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Mono,
    Atomic,
    Top,
    Temp,
    TopTemp,
    TempTop,
    Random,
}

impl Strategy {
    pub const ALL: [Strategy; 7] = [
        Strategy::Mono,
        Strategy::Atomic,
        Strategy::Top,
        Strategy::Temp,
        Strategy::TopTemp,
        Strategy::TempTop,
        Strategy::Random,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Mono => "mono",
            Strategy::Atomic => "atomic",
            Strategy::Top => "top",
            Strategy::Temp => "temp",
            Strategy::TopTemp => "toptemp",
            Strategy::TempTop => "temptop",
            Strategy::Random => "random",
        }
    }

    /// Label used in evaluation reports.
    pub fn label(self) -> &'static str {
        match self {
            Strategy::Mono => "Mono",
            Strategy::Atomic => "Atomic",
            Strategy::Top => "Top",
            Strategy::Temp => "Temp",
            Strategy::TopTemp => "TopTemp",
            Strategy::TempTop => "TempTop",
            Strategy::Random => "Random",
        }
    }

    pub fn uses_topics(self) -> bool {
        matches!(self, Strategy::Top | Strategy::TopTemp | Strategy::TempTop)
    }

    pub fn uses_grid(self) -> bool {
        matches!(self, Strategy::Temp | Strategy::TopTemp | Strategy::TempTop)
    }

    /// Strategies whose subprofiles carry a meaningful age.
    pub fn supports_decay(self) -> bool {
        matches!(
            self,
            Strategy::Atomic | Strategy::Temp | Strategy::TopTemp | Strategy::TempTop
        )
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidConfig(format!("unknown strategy `{s}`")))
    }
}

/// Year boundaries `t_0 < t_1 < ... < t_h` defining half-open periods
/// `[t_{u-1}, t_u)`, indexed from 0.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeGrid {
    boundaries: Vec<i32>,
}

impl TimeGrid {
    pub fn new(boundaries: Vec<i32>) -> Result<Self> {
        if boundaries.len() < 2 {
            return Err(Error::InvalidConfig("a time grid needs at least two boundaries".into()));
        }
        if boundaries.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidConfig(
                "time grid boundaries must be strictly increasing".into(),
            ));
        }
        Ok(TimeGrid { boundaries })
    }

    /// A single period spanning `first_year..=last_year`.
    pub fn covering(first_year: i32, last_year: i32) -> Self {
        TimeGrid {
            boundaries: vec![first_year, last_year.max(first_year) + 1],
        }
    }

    pub fn boundaries(&self) -> &[i32] {
        &self.boundaries
    }

    /// Number of periods.
    pub fn h(&self) -> usize {
        self.boundaries.len() - 1
    }

    pub fn start(&self) -> i32 {
        self.boundaries[0]
    }

    pub fn end(&self) -> i32 {
        self.boundaries[self.boundaries.len() - 1]
    }

    pub fn period_of(&self, year: i32) -> Option<usize> {
        if year < self.start() || year >= self.end() {
            return None;
        }
        Some(self.boundaries.partition_point(|&b| b <= year) - 1)
    }

    fn require_period(&self, year: i32) -> Result<usize> {
        self.period_of(year).ok_or(Error::YearOutsideGrid {
            year,
            start: self.start(),
            end: self.end(),
        })
    }

    /// Check that every year of `corpus` falls inside the grid.
    pub fn covers(&self, corpus: &Corpus) -> Result<()> {
        let (min, max) = corpus.year_range();
        self.require_period(min)?;
        self.require_period(max)?;
        Ok(())
    }
}

impl fmt::Display for TimeGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.boundaries.iter().map(i32::to_string).collect();
        f.write_str(&parts.join(","))
    }
}

impl FromStr for TimeGrid {
    type Err = Error;

    /// Comma-separated years, e.g. `2007,2009,2011,2013,2015,2016`.
    fn from_str(s: &str) -> Result<Self> {
        let boundaries = s
            .split(',')
            .map(|p| {
                p.trim()
                    .parse::<i32>()
                    .map_err(|_| Error::InvalidConfig(format!("bad grid year `{p}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        TimeGrid::new(boundaries)
    }
}

/// One retrieval unit: some documents of one item, concatenated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subprofile {
    pub item_id: String,
    pub strategy: Strategy,
    pub topic: Option<usize>,
    /// Time period, or the random part for [`Strategy::Random`].
    pub period: Option<usize>,
    pub member_doc_ids: Vec<String>,
    /// Mean publication year of the members.
    pub rep_year: f64,
}

/// Parameters a set was built with.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub grid: Option<TimeGrid>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub lda: Option<LdaConfig>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub vocabulary: Option<VocabularyParams>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub n_parts: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubprofileSet {
    pub strategy: Strategy,
    pub subprofiles: Vec<Subprofile>,
    pub provenance: Provenance,
}

#[derive(Serialize, Deserialize)]
struct SetHeader {
    format: String,
    version: u32,
    strategy: Strategy,
    provenance: Provenance,
    #[serde(default)]
    config: serde_json::Value,
}

const SET_FORMAT: &str = "venrec-subprofiles";
const SET_VERSION: u32 = 1;

impl SubprofileSet {
    pub fn len(&self) -> usize {
        self.subprofiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subprofiles.is_empty()
    }

    /// Document partition as a set of member sets.
    pub fn partition(&self) -> BTreeSet<BTreeSet<&str>> {
        self.subprofiles
            .iter()
            .map(|s| s.member_doc_ids.iter().map(String::as_str).collect())
            .collect()
    }

    pub fn per_item_counts(&self) -> BTreeMap<&str, usize> {
        let mut counts = BTreeMap::new();
        for s in &self.subprofiles {
            *counts.entry(s.item_id.as_str()).or_insert(0) += 1;
        }
        counts
    }

    /// Check that the members partition `train` and never cross items.
    pub fn check_partition(&self, train: &Corpus) -> std::result::Result<(), String> {
        let owner: BTreeMap<&str, &str> = train
            .documents()
            .iter()
            .map(|d| (d.doc_id.as_str(), d.venue_id.as_str()))
            .collect();
        let mut seen = BTreeSet::new();
        for (i, s) in self.subprofiles.iter().enumerate() {
            if s.member_doc_ids.is_empty() {
                return Err(format!("subprofile {i} is empty"));
            }
            for id in &s.member_doc_ids {
                match owner.get(id.as_str()) {
                    None => return Err(format!("subprofile {i}: unknown document {id}")),
                    Some(&item) if item != s.item_id => {
                        return Err(format!("subprofile {i}: {id} belongs to {item}, not {}", s.item_id))
                    }
                    _ => {}
                }
                if !seen.insert(id.as_str()) {
                    return Err(format!("document {id} appears twice"));
                }
            }
        }
        if seen.len() != owner.len() {
            return Err(format!("{} of {} documents covered", seen.len(), owner.len()));
        }
        Ok(())
    }

    /// Write the line-delimited artifact: a header line, then one record
    /// per subprofile. `config` is echoed into the header verbatim.
    pub fn write_jsonl(&self, mut out: impl Write, config: &serde_json::Value) -> Result<()> {
        let header = SetHeader {
            format: SET_FORMAT.into(),
            version: SET_VERSION,
            strategy: self.strategy,
            provenance: self.provenance.clone(),
            config: config.clone(),
        };
        write_line(&mut out, &header)?;
        for s in &self.subprofiles {
            write_line(&mut out, s)?;
        }
        Ok(())
    }

    pub fn read_jsonl(input: impl BufRead) -> Result<Self> {
        let mut lines = input.lines();
        let header_line = lines
            .next()
            .ok_or_else(|| Error::Artifact("empty subprofile artifact".into()))?
            .map_err(|e| Error::io("<subprofiles>", e))?;
        let header: SetHeader =
            serde_json::from_str(&header_line).map_err(|e| Error::Artifact(format!("header: {e}")))?;
        if header.format != SET_FORMAT || header.version != SET_VERSION {
            return Err(Error::Artifact(format!(
                "unsupported subprofile artifact {} v{}",
                header.format, header.version
            )));
        }
        let mut subprofiles = Vec::new();
        for (i, line) in lines.enumerate() {
            let line = line.map_err(|e| Error::io("<subprofiles>", e))?;
            if line.trim().is_empty() {
                continue;
            }
            let s: Subprofile =
                serde_json::from_str(&line).map_err(|e| Error::Artifact(format!("record {}: {e}", i + 1)))?;
            subprofiles.push(s);
        }
        Ok(SubprofileSet {
            strategy: header.strategy,
            subprofiles,
            provenance: header.provenance,
        })
    }
}

fn write_line<T: Serialize>(out: &mut impl Write, value: &T) -> Result<()> {
    serde_json::to_writer(&mut *out, value).map_err(|e| Error::Artifact(e.to_string()))?;
    out.write_all(b"\n").map_err(|e| Error::io("<subprofiles>", e))
}

/// Ordering key of a group within its item.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct GroupKey {
    period: Option<usize>,
    topic: Option<usize>,
    doc: Option<usize>,
}

/// Group documents by item and `key`, emitting subprofiles ordered by item
/// id then key; members keep corpus order.
fn group(
    train: &Corpus,
    strategy: Strategy,
    provenance: Provenance,
    mut key: impl FnMut(usize, &Document) -> Result<GroupKey>,
) -> Result<SubprofileSet> {
    let mut groups: BTreeMap<(&str, GroupKey), Vec<&Document>> = BTreeMap::new();
    for (i, d) in train.documents().iter().enumerate() {
        let k = key(i, d)?;
        groups.entry((d.venue_id.as_str(), k)).or_default().push(d);
    }
    let subprofiles = groups
        .into_iter()
        .map(|((item, k), docs)| Subprofile {
            item_id: item.to_owned(),
            strategy,
            topic: k.topic,
            period: k.period,
            rep_year: docs.iter().map(|d| d.year as f64).sum::<f64>() / docs.len() as f64,
            member_doc_ids: docs.into_iter().map(|d| d.doc_id.clone()).collect(),
        })
        .collect();
    Ok(SubprofileSet {
        strategy,
        subprofiles,
        provenance,
    })
}

const NO_KEY: GroupKey = GroupKey {
    period: None,
    topic: None,
    doc: None,
};

/// One profile per item holding all of its documents.
pub fn build_mono(train: &Corpus) -> SubprofileSet {
    group(train, Strategy::Mono, Provenance::default(), |_, _| Ok(NO_KEY)).expect("infallible key")
}

/// One subprofile per document.
pub fn build_atomic(train: &Corpus) -> SubprofileSet {
    group(train, Strategy::Atomic, Provenance::default(), |i, _| {
        Ok(GroupKey { doc: Some(i), ..NO_KEY })
    })
    .expect("infallible key")
}

fn check_model(train: &Corpus, model: &TopicModel) -> Result<()> {
    if model.doc_ids().len() != train.len() {
        return Err(Error::ModelMismatch(format!(
            "model has {} documents, corpus {}",
            model.doc_ids().len(),
            train.len()
        )));
    }
    Ok(())
}

fn topic_of(model: &TopicModel, d: &Document) -> Result<usize> {
    model
        .assign_topic(&d.doc_id)
        .map_err(|_| Error::ModelMismatch(format!("document {} was not fitted", d.doc_id)))
}

/// Group each item's documents by their most probable global topic.
pub fn build_topical(train: &Corpus, model: &TopicModel) -> Result<SubprofileSet> {
    check_model(train, model)?;
    let provenance = Provenance {
        lda: Some(*model.config()),
        ..Default::default()
    };
    group(train, Strategy::Top, provenance, |_, d| {
        Ok(GroupKey {
            topic: Some(topic_of(model, d)?),
            ..NO_KEY
        })
    })
}

/// Group each item's documents by publication period.
pub fn build_temporal(train: &Corpus, grid: &TimeGrid) -> Result<SubprofileSet> {
    let provenance = Provenance {
        grid: Some(grid.clone()),
        ..Default::default()
    };
    group(train, Strategy::Temp, provenance, |_, d| {
        Ok(GroupKey {
            period: Some(grid.require_period(d.year)?),
            ..NO_KEY
        })
    })
}

/// Intersect global topics with periods.
pub fn build_top_temp(train: &Corpus, model: &TopicModel, grid: &TimeGrid) -> Result<SubprofileSet> {
    check_model(train, model)?;
    let provenance = Provenance {
        grid: Some(grid.clone()),
        lda: Some(*model.config()),
        ..Default::default()
    };
    group(train, Strategy::TopTemp, provenance, |_, d| {
        Ok(GroupKey {
            period: Some(grid.require_period(d.year)?),
            topic: Some(topic_of(model, d)?),
            doc: None,
        })
    })
}

/// Fit one topic model per period of `grid`, each with its own pruned
/// vocabulary. Period `u` is seeded with `lda.seed + u`.
///
/// `tokens` must be aligned with `train.documents()`.
pub fn fit_period_models(
    train: &Corpus,
    tokens: &[TokenizedDoc],
    grid: &TimeGrid,
    lda: &LdaConfig,
    vocabulary: VocabularyParams,
) -> Result<Vec<TopicModel>> {
    if tokens.len() != train.len() {
        return Err(Error::ModelMismatch("token streams not aligned with corpus".into()));
    }
    let mut partitions: Vec<Vec<TokenizedDoc>> = vec![Vec::new(); grid.h()];
    for (d, t) in train.documents().iter().zip(tokens) {
        partitions[grid.require_period(d.year)?].push(t.clone());
    }
    if let Some(u) = partitions.iter().position(Vec::is_empty) {
        return Err(Error::EmptyPeriod(u));
    }
    partitions
        .par_iter()
        .enumerate()
        .map(|(u, docs)| {
            let vocab = build_vocabulary(docs, vocabulary)?;
            fit_lda(docs, &vocab, &lda.with_seed(lda.seed.wrapping_add(u as u64)))
        })
        .collect()
}

/// Group by period, then by the period-local topic of each document.
/// `models[u]` must have been fitted on exactly the documents of period `u`.
pub fn build_temp_top_from_models(
    train: &Corpus,
    grid: &TimeGrid,
    models: &[TopicModel],
    vocabulary: Option<VocabularyParams>,
) -> Result<SubprofileSet> {
    if models.len() != grid.h() {
        return Err(Error::ModelMismatch(format!(
            "{} period models for {} periods",
            models.len(),
            grid.h()
        )));
    }
    let provenance = Provenance {
        grid: Some(grid.clone()),
        lda: models.first().map(|m| *m.config()),
        vocabulary,
        ..Default::default()
    };
    group(train, Strategy::TempTop, provenance, |_, d| {
        let u = grid.require_period(d.year)?;
        Ok(GroupKey {
            period: Some(u),
            topic: Some(topic_of(&models[u], d)?),
            doc: None,
        })
    })
}

/// Per-period LDA followed by period-local topical grouping.
pub fn build_temp_top(
    train: &Corpus,
    tokens: &[TokenizedDoc],
    grid: &TimeGrid,
    lda: &LdaConfig,
    vocabulary: VocabularyParams,
) -> Result<SubprofileSet> {
    let models = fit_period_models(train, tokens, grid, lda, vocabulary)?;
    build_temp_top_from_models(train, grid, &models, Some(vocabulary))
}

/// Assign every document to one of `n_parts` uniformly random parts.
pub fn build_random(train: &Corpus, n_parts: usize, seed: u64) -> Result<SubprofileSet> {
    if n_parts < 1 {
        return Err(Error::InvalidConfig("n_parts must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let parts: Vec<usize> = (0..train.len()).map(|_| rng.random_range(0..n_parts)).collect();
    let provenance = Provenance {
        n_parts: Some(n_parts),
        seed: Some(seed),
        ..Default::default()
    };
    group(train, Strategy::Random, provenance, |i, _| {
        Ok(GroupKey {
            period: Some(parts[i]),
            ..NO_KEY
        })
    })
}
