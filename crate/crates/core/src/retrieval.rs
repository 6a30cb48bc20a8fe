//! Inverted index over subprofiles and query-likelihood scoring with
//! Jelinek-Mercer smoothing.

use std::collections::HashMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{default_analyzer, Corpus, TokenizedDoc};
use crate::error::{Error, Result};
use crate::profiles::{Strategy, SubprofileSet};

const INDEX_TAG: &[u8; 8] = b"VRINDEX\0";
const INDEX_VERSION: u32 = 1;

/// Per-term contribution to a unit's retrieval score.
pub trait Scorer: Sync {
    /// `tf` occurrences in a unit of `unit_len` tokens; the term occurs
    /// `cf` times in a collection of `total` tokens.
    fn term_weight(&self, tf: u64, unit_len: u64, cf: u64, total: u64) -> f64;
}

/// `log(1 + ((1 - lambda) * tf / |s|) / (lambda * cf / |C|))`.
///
/// Rank-equivalent to the smoothed query likelihood, but non-negative and
/// zero for terms the unit does not contain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JelinekMercer {
    pub lambda: f64,
}

impl JelinekMercer {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(Error::InvalidConfig(format!("lambda must be in (0, 1), got {lambda}")));
        }
        Ok(JelinekMercer { lambda })
    }
}

impl Default for JelinekMercer {
    fn default() -> Self {
        JelinekMercer { lambda: 0.1 }
    }
}

impl Scorer for JelinekMercer {
    fn term_weight(&self, tf: u64, unit_len: u64, cf: u64, total: u64) -> f64 {
        if tf == 0 || cf == 0 || unit_len == 0 {
            return 0.0;
        }
        let doc = (1.0 - self.lambda) * tf as f64 / unit_len as f64;
        let coll = self.lambda * cf as f64 / total as f64;
        (doc / coll).ln_1p()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Posting {
    pub unit: u32,
    pub tf: u32,
}

/// Inverted index whose units are the non-empty subprofiles of one set.
///
/// Also carries each subprofile's owning item and representative year so
/// rankings can be fused without the original set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Index {
    strategy: Strategy,
    dictionary: HashMap<String, u32>,
    postings: Vec<Vec<Posting>>,
    coll_freq: Vec<u64>,
    unit_length: Vec<u64>,
    /// Subprofile id (position in the set) of each unit.
    unit_subprofile: Vec<usize>,
    total_tokens: u64,
    subprofile_item: Vec<String>,
    subprofile_rep_year: Vec<f64>,
    /// Free-form JSON describing how the index was built.
    provenance: String,
}

/// A tokenized test article with its known venue.
#[derive(Debug, Clone, PartialEq)]
pub struct Query {
    pub query_id: String,
    pub tokens: Vec<String>,
    pub truth_item: Option<String>,
}

impl Query {
    pub fn from_text(query_id: impl Into<String>, text: &str) -> Self {
        Query {
            query_id: query_id.into(),
            tokens: crate::corpus::analyze(text),
            truth_item: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankedSubprofile {
    pub subprofile: usize,
    pub score: f64,
    /// 1-based.
    pub rank: usize,
}

/// Subprofiles by descending score; ties by ascending subprofile id.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScoredRanking {
    pub entries: Vec<RankedSubprofile>,
}

impl ScoredRanking {
    /// Sort `(subprofile, score)` pairs and assign ranks.
    pub fn from_scores(mut scores: Vec<(usize, f64)>) -> Self {
        scores.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        ScoredRanking {
            entries: scores
                .into_iter()
                .enumerate()
                .map(|(i, (subprofile, score))| RankedSubprofile {
                    subprofile,
                    score,
                    rank: i + 1,
                })
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Index `set`, tokenizing member documents of `corpus` with the bundled analyzer.
pub fn build_index(set: &SubprofileSet, corpus: &Corpus) -> Result<Index> {
    let analyzer = default_analyzer();
    let tokens: Vec<TokenizedDoc> = corpus.documents().par_iter().map(|d| analyzer.tokenize(d)).collect();
    build_index_from_tokens(set, &tokens)
}

/// Index `set` from pre-tokenized documents.
pub fn build_index_from_tokens(set: &SubprofileSet, docs: &[TokenizedDoc]) -> Result<Index> {
    if set.is_empty() {
        return Err(Error::EmptySubprofileSet);
    }
    let streams: HashMap<&str, &[String]> = docs.iter().map(|d| (d.doc_id.as_str(), d.tokens.as_slice())).collect();

    let mut index = Index {
        strategy: set.strategy,
        dictionary: HashMap::new(),
        postings: Vec::new(),
        coll_freq: Vec::new(),
        unit_length: Vec::new(),
        unit_subprofile: Vec::new(),
        total_tokens: 0,
        subprofile_item: set.subprofiles.iter().map(|s| s.item_id.clone()).collect(),
        subprofile_rep_year: set.subprofiles.iter().map(|s| s.rep_year).collect(),
        provenance: String::new(),
    };
    let mut tf: HashMap<u32, u32> = HashMap::new();
    for (sid, sub) in set.subprofiles.iter().enumerate() {
        tf.clear();
        let mut length = 0u64;
        for doc_id in &sub.member_doc_ids {
            let stream = streams
                .get(doc_id.as_str())
                .ok_or_else(|| Error::UnknownDocument(doc_id.clone()))?;
            for term in stream.iter() {
                let next = index.dictionary.len() as u32;
                let id = *index.dictionary.entry(term.clone()).or_insert(next);
                if id == next {
                    index.postings.push(Vec::new());
                    index.coll_freq.push(0);
                }
                *tf.entry(id).or_insert(0) += 1;
                length += 1;
            }
        }
        if length == 0 {
            log::warn!("subprofile {sid} of item {} has no tokens; not indexed", sub.item_id);
            continue;
        }
        let unit = index.unit_length.len() as u32;
        let mut terms: Vec<(u32, u32)> = tf.iter().map(|(&t, &c)| (t, c)).collect();
        terms.sort_unstable();
        for (term, count) in terms {
            index.postings[term as usize].push(Posting { unit, tf: count });
            index.coll_freq[term as usize] += count as u64;
        }
        index.unit_length.push(length);
        index.unit_subprofile.push(sid);
        index.total_tokens += length;
    }
    if index.unit_length.is_empty() {
        return Err(Error::EmptySubprofileSet);
    }
    Ok(index)
}

impl Index {
    pub fn strategy(&self) -> Strategy {
        self.strategy
    }

    pub fn n_units(&self) -> usize {
        self.unit_length.len()
    }

    pub fn n_subprofiles(&self) -> usize {
        self.subprofile_item.len()
    }

    pub fn total_tokens(&self) -> u64 {
        self.total_tokens
    }

    pub fn vocabulary_size(&self) -> usize {
        self.dictionary.len()
    }

    /// Indexed terms, in no particular order.
    pub fn terms(&self) -> impl Iterator<Item = &str> {
        self.dictionary.keys().map(String::as_str)
    }

    pub fn coll_freq(&self, term: &str) -> u64 {
        self.dictionary.get(term).map_or(0, |&t| self.coll_freq[t as usize])
    }

    pub fn postings(&self, term: &str) -> &[Posting] {
        self.dictionary.get(term).map_or(&[], |&t| &self.postings[t as usize])
    }

    pub fn unit_length(&self, unit: usize) -> u64 {
        self.unit_length[unit]
    }

    pub fn unit_subprofile(&self, unit: usize) -> usize {
        self.unit_subprofile[unit]
    }

    /// Owning item of every subprofile, indexed by subprofile id.
    pub fn subprofile_items(&self) -> &[String] {
        &self.subprofile_item
    }

    /// Representative year of every subprofile, indexed by subprofile id.
    pub fn subprofile_rep_years(&self) -> &[f64] {
        &self.subprofile_rep_year
    }

    /// Distinct items with at least one indexed unit.
    pub fn items(&self) -> std::collections::BTreeSet<&str> {
        self.unit_subprofile
            .iter()
            .map(|&s| self.subprofile_item[s].as_str())
            .collect()
    }

    /// Score every unit sharing at least one term with `query`.
    pub fn score(&self, query: &Query, lambda: f64) -> Result<ScoredRanking> {
        let scorer = JelinekMercer::new(lambda)?;
        Ok(self.score_with(query, &scorer))
    }

    pub fn score_with(&self, query: &Query, scorer: &impl Scorer) -> ScoredRanking {
        let mut qtf: HashMap<u32, u32> = HashMap::new();
        for t in &query.tokens {
            if let Some(&id) = self.dictionary.get(t) {
                *qtf.entry(id).or_insert(0) += 1;
            }
        }
        let mut acc: HashMap<u32, f64> = HashMap::new();
        let mut terms: Vec<(u32, u32)> = qtf.into_iter().collect();
        // Fixed summation order keeps scores bit-identical across runs.
        terms.sort_unstable();
        for (term, q) in terms {
            let cf = self.coll_freq[term as usize];
            for p in &self.postings[term as usize] {
                let w = scorer.term_weight(p.tf as u64, self.unit_length[p.unit as usize], cf, self.total_tokens);
                *acc.entry(p.unit).or_insert(0.0) += q as f64 * w;
            }
        }
        ScoredRanking::from_scores(
            acc.into_iter()
                .map(|(unit, s)| (self.unit_subprofile[unit as usize], s))
                .collect(),
        )
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn set_provenance(&mut self, json: String) {
        self.provenance = json;
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::artifact::save(path, INDEX_TAG, INDEX_VERSION, self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        crate::artifact::load(path, INDEX_TAG, INDEX_VERSION)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::Subprofile;

    fn set_of(streams: &[&[&str]]) -> (SubprofileSet, Vec<TokenizedDoc>) {
        let mut docs = Vec::new();
        let subprofiles = streams
            .iter()
            .enumerate()
            .map(|(i, s)| {
                docs.push(TokenizedDoc {
                    doc_id: format!("d{i}"),
                    tokens: s.iter().map(|t| t.to_string()).collect(),
                });
                Subprofile {
                    item_id: format!("item{i}"),
                    strategy: Strategy::Mono,
                    topic: None,
                    period: None,
                    member_doc_ids: vec![format!("d{i}")],
                    rep_year: 2010.0,
                }
            })
            .collect();
        let set = SubprofileSet {
            strategy: Strategy::Mono,
            subprofiles,
            provenance: Default::default(),
        };
        (set, docs)
    }

    fn query(tokens: &[&str]) -> Query {
        Query {
            query_id: "q".into(),
            tokens: tokens.iter().map(|t| t.to_string()).collect(),
            truth_item: None,
        }
    }

    #[test]
    fn collection_statistics() {
        let (set, docs) = set_of(&[&["a", "b", "a"], &["b", "c"]]);
        let index = build_index_from_tokens(&set, &docs).unwrap();
        assert_eq!(index.coll_freq("a"), 2);
        assert_eq!(index.coll_freq("b"), 2);
        assert_eq!(index.coll_freq("c"), 1);
        assert_eq!(index.total_tokens(), 5);
        assert_eq!(index.n_units(), 2);
    }

    #[test]
    fn empty_unit_is_skipped() {
        let (set, docs) = set_of(&[&["a"], &[]]);
        let index = build_index_from_tokens(&set, &docs).unwrap();
        assert_eq!(index.n_units(), 1);
        assert_eq!(index.n_subprofiles(), 2);
        let (set, docs) = set_of(&[&[]]);
        assert!(matches!(
            build_index_from_tokens(&set, &docs),
            Err(Error::EmptySubprofileSet)
        ));
    }

    #[test]
    fn higher_tf_ranks_first() {
        // Both units have 10 tokens; "x" appears twice in the first, once in the second.
        let first = ["x", "x", "a", "a", "a", "a", "a", "a", "a", "a"];
        let second = ["x", "b", "b", "b", "b", "b", "b", "b", "b", "b"];
        let (set, docs) = set_of(&[&second, &first]);
        let index = build_index_from_tokens(&set, &docs).unwrap();
        let r = index.score(&query(&["x"]), 0.5).unwrap();
        assert_eq!(r.entries[0].subprofile, 1);
        assert_eq!(r.entries[1].subprofile, 0);
        assert!(r.entries[0].score > r.entries[1].score);
        assert_eq!(r.entries.iter().map(|e| e.rank).collect::<Vec<_>>(), vec![1, 2]);
    }

    #[test]
    fn toy_index_matches_direct_formula() {
        let (set, docs) = set_of(&[&["a", "b", "a", "c"], &["b", "c", "c"], &["d", "a"]]);
        let index = build_index_from_tokens(&set, &docs).unwrap();
        let r = index.score(&query(&["a", "c", "a"]), 0.5).unwrap();
        // Total 9 tokens; cf(a)=3, cf(c)=3.
        let w = |tf: f64, len: f64, cf: f64| (1.0 + (0.5 * tf / len) / (0.5 * cf / 9.0)).ln();
        let expected = [
            (0, 2.0 * w(2.0, 4.0, 3.0) + w(1.0, 4.0, 3.0)),
            (1, w(2.0, 3.0, 3.0)),
            (2, 2.0 * w(1.0, 2.0, 3.0)),
        ];
        for (sid, score) in expected {
            let got = r.entries.iter().find(|e| e.subprofile == sid).unwrap().score;
            assert!((got - score).abs() < 1e-12, "{sid}: {got} vs {score}");
        }
    }

    #[test]
    fn unmatched_query_gives_empty_ranking() {
        let (set, docs) = set_of(&[&["a"]]);
        let index = build_index_from_tokens(&set, &docs).unwrap();
        assert!(index.score(&query(&["zzz"]), 0.1).unwrap().is_empty());
        assert!(index.score(&query(&[]), 0.1).unwrap().is_empty());
    }

    #[test]
    fn lambda_must_be_open_unit_interval() {
        let (set, docs) = set_of(&[&["a"]]);
        let index = build_index_from_tokens(&set, &docs).unwrap();
        for bad in [0.0, 1.0, -0.1, f64::NAN] {
            assert!(index.score(&query(&["a"]), bad).is_err());
        }
    }

    #[test]
    fn ties_break_by_subprofile_id() {
        let (set, docs) = set_of(&[&["a", "b"], &["a", "c"], &["a", "d"]]);
        let index = build_index_from_tokens(&set, &docs).unwrap();
        let r = index.score(&query(&["a"]), 0.3).unwrap();
        assert_eq!(
            r.entries.iter().map(|e| e.subprofile).collect::<Vec<_>>(),
            vec![0, 1, 2]
        );
    }

    #[test]
    fn unknown_member_document() {
        let (set, mut docs) = set_of(&[&["a"]]);
        docs.clear();
        assert!(matches!(
            build_index_from_tokens(&set, &docs),
            Err(Error::UnknownDocument(_))
        ));
    }

    #[test]
    fn artifact_roundtrip() {
        let (set, docs) = set_of(&[&["a", "b"], &["c"]]);
        let index = build_index_from_tokens(&set, &docs).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("index.bin");
        index.save(&path).unwrap();
        assert_eq!(Index::load(&path).unwrap(), index);
        std::fs::write(&path, b"garbage!garbage!").unwrap();
        assert!(matches!(Index::load(&path), Err(Error::Artifact(_))));
    }
}
