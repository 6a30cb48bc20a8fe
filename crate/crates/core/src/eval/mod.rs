//! Test articles as queries: Recall@X, truncated MRR, and paired
//! comparison of systems.

mod stats;

use std::collections::BTreeSet;
use std::io::{BufRead, Write};

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{default_analyzer, Corpus};
use crate::error::{Error, Result};
use crate::fusion::DecayKind;
use crate::pipeline::System;
use crate::profiles::Strategy;
use crate::retrieval::Query;

pub use stats::{chi_square_sf, mcnemar, McNemar};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryOutcome {
    pub query_id: String,
    pub truth_item: String,
    /// 1-based; `None` if the true item was not retrieved.
    pub rank_of_truth: Option<usize>,
    /// The true item has no profile, so the query could never be answered.
    #[serde(default)]
    pub unprofiled: bool,
}

impl QueryOutcome {
    pub fn hit_at(&self, x: usize) -> bool {
        self.rank_of_truth.is_some_and(|r| r <= x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemLabel {
    pub strategy: Strategy,
    pub k: Option<usize>,
    pub decay: DecayKind,
}

impl SystemLabel {
    pub fn of(system: &System) -> Self {
        let config = system.config();
        SystemLabel {
            strategy: config.profiles.strategy(),
            k: config.profiles.lda().map(|l| l.k),
            decay: config.decay,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub label: SystemLabel,
    /// Sorted by query id.
    pub outcomes: Vec<QueryOutcome>,
    pub r_at_1: f64,
    pub r_at_5: f64,
    pub mrr_at_40: f64,
}

pub const TSV_HEADER: &str = "Subprofiles\t#Topics\tDecay\tR@1\tR@5\tMRR@40";

impl EvalReport {
    pub fn from_outcomes(label: SystemLabel, mut outcomes: Vec<QueryOutcome>) -> Result<Self> {
        outcomes.sort_by(|a, b| a.query_id.cmp(&b.query_id));
        Ok(EvalReport {
            label,
            r_at_1: recall_at(&outcomes, 1)?,
            r_at_5: recall_at(&outcomes, 5)?,
            mrr_at_40: mrr_at(&outcomes, 40)?,
            outcomes,
        })
    }

    /// One row under [`TSV_HEADER`].
    pub fn tsv_row(&self) -> String {
        let k = self.label.k.map_or_else(|| "-".to_owned(), |k| k.to_string());
        format!(
            "{}\t{}\t{}\t{:.4}\t{:.4}\t{:.4}",
            self.label.strategy.label(),
            k,
            self.label.decay.label(),
            self.r_at_1,
            self.r_at_5,
            self.mrr_at_40
        )
    }

    pub fn hits_at_1(&self) -> Vec<bool> {
        self.outcomes.iter().map(|o| o.hit_at(1)).collect()
    }

    pub fn n_unprofiled(&self) -> usize {
        self.outcomes.iter().filter(|o| o.unprofiled).count()
    }
}

fn check_cutoff(outcomes: &[QueryOutcome], cutoff: usize) -> Result<()> {
    if outcomes.is_empty() {
        return Err(Error::EmptyOutcomes);
    }
    if cutoff < 1 {
        return Err(Error::InvalidConfig("metric cutoff must be >= 1".into()));
    }
    Ok(())
}

/// Fraction of queries whose true item is within the first `x`.
pub fn recall_at(outcomes: &[QueryOutcome], x: usize) -> Result<f64> {
    check_cutoff(outcomes, x)?;
    let hits = outcomes.iter().filter(|o| o.hit_at(x)).count();
    Ok(hits as f64 / outcomes.len() as f64)
}

/// Mean of `1 / rank`, with ranks beyond `y` contributing 0.
pub fn mrr_at(outcomes: &[QueryOutcome], y: usize) -> Result<f64> {
    check_cutoff(outcomes, y)?;
    let sum: f64 = outcomes
        .iter()
        .filter_map(|o| o.rank_of_truth.filter(|&r| r <= y))
        .map(|r| 1.0 / r as f64)
        .sum();
    Ok(sum / outcomes.len() as f64)
}

/// Query every test article against `system`.
pub fn evaluate(system: &System, test: &Corpus) -> Result<EvalReport> {
    if test.is_empty() {
        return Err(Error::EmptyPartition("test"));
    }
    let profiled: BTreeSet<&str> = system.index().items();
    let outcomes = test
        .documents()
        .par_iter()
        .map(|doc| {
            let tokens = default_analyzer().tokenize(doc).tokens;
            let query = Query {
                query_id: doc.doc_id.clone(),
                tokens,
                truth_item: Some(doc.venue_id.clone()),
            };
            let unprofiled = !profiled.contains(doc.venue_id.as_str());
            let rank_of_truth = if unprofiled {
                None
            } else {
                system.recommend(&query)?.rank_of(&doc.venue_id)
            };
            Ok(QueryOutcome {
                query_id: doc.doc_id.clone(),
                truth_item: doc.venue_id.clone(),
                rank_of_truth,
                unprofiled,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let report = EvalReport::from_outcomes(SystemLabel::of(system), outcomes)?;
    if report.n_unprofiled() > 0 {
        warn!("{} test queries have an unprofiled venue", report.n_unprofiled());
    }
    Ok(report)
}

const OUTCOME_HEADER: &str = "query_id\ttruth_item\trank_of_truth\tunprofiled";

/// Tab-separated, one query per line; an absent rank is written as `-`.
pub fn write_outcomes(outcomes: &[QueryOutcome], mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "{OUTCOME_HEADER}")?;
    for o in outcomes {
        let rank = o.rank_of_truth.map_or_else(|| "-".to_owned(), |r| r.to_string());
        writeln!(
            out,
            "{}\t{}\t{}\t{}",
            o.query_id, o.truth_item, rank, o.unprofiled as u8
        )?;
    }
    Ok(())
}

pub fn read_outcomes(input: impl BufRead) -> Result<Vec<QueryOutcome>> {
    let bad = |n: usize, m: &str| Error::Artifact(format!("outcome line {n}: {m}"));
    let mut lines = input.lines().enumerate();
    match lines.next() {
        Some((_, Ok(h))) if h == OUTCOME_HEADER => {}
        _ => return Err(Error::Artifact("missing outcome header".into())),
    }
    let mut outcomes = Vec::new();
    for (i, line) in lines {
        let line = line.map_err(|e| Error::Artifact(e.to_string()))?;
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 4 {
            return Err(bad(i + 1, "expected 4 fields"));
        }
        let rank_of_truth = match f[2] {
            "-" => None,
            r => Some(
                r.parse::<usize>()
                    .ok()
                    .filter(|&r| r >= 1)
                    .ok_or_else(|| bad(i + 1, "bad rank"))?,
            ),
        };
        outcomes.push(QueryOutcome {
            query_id: f[0].to_owned(),
            truth_item: f[1].to_owned(),
            rank_of_truth,
            unprofiled: f[3] == "1",
        });
    }
    Ok(outcomes)
}

/// McNemar on R@1 hits, pairing queries by id. Both runs must cover the
/// same queries.
pub fn compare(a: &[QueryOutcome], b: &[QueryOutcome]) -> Result<McNemar> {
    let mut a: Vec<&QueryOutcome> = a.iter().collect();
    let mut b: Vec<&QueryOutcome> = b.iter().collect();
    a.sort_by(|x, y| x.query_id.cmp(&y.query_id));
    b.sort_by(|x, y| x.query_id.cmp(&y.query_id));
    if a.len() != b.len() {
        return Err(Error::QueryMismatch(format!("{} vs {} queries", a.len(), b.len())));
    }
    if let Some((x, y)) = a.iter().zip(&b).find(|(x, y)| x.query_id != y.query_id) {
        return Err(Error::QueryMismatch(format!("`{}` vs `{}`", x.query_id, y.query_id)));
    }
    let hits = |v: &[&QueryOutcome]| v.iter().map(|o| o.hit_at(1)).collect::<Vec<_>>();
    mcnemar(&hits(&a), &hits(&b))
}
