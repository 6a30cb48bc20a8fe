//! Turning a subprofile ranking into an item ranking: max-normalization,
//! optional age decay, and CombLgDCS fusion.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profiles::Strategy;
use crate::retrieval::{Index, Query, ScoredRanking};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum DecayKind {
    #[default]
    #[serde(rename = "none")]
    None,
    /// `score / (1 + penalty)`
    #[serde(rename = "linear")]
    Linear,
    /// `score / (1 + penalty)^(1/4)`
    #[serde(rename = "2sqrt")]
    TwoSqrt,
}

impl DecayKind {
    pub fn name(self) -> &'static str {
        match self {
            DecayKind::None => "none",
            DecayKind::Linear => "linear",
            DecayKind::TwoSqrt => "2sqrt",
        }
    }

    /// Label used in evaluation reports.
    pub fn label(self) -> &'static str {
        match self {
            DecayKind::None => "None",
            DecayKind::Linear => "Linear",
            DecayKind::TwoSqrt => "2Sqrt",
        }
    }

    pub fn apply(self, score: f64, penalty: f64) -> f64 {
        match self {
            DecayKind::None => score,
            DecayKind::Linear => score / (1.0 + penalty),
            DecayKind::TwoSqrt => score / (1.0 + penalty).sqrt().sqrt(),
        }
    }
}

impl fmt::Display for DecayKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DecayKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(DecayKind::None),
            "linear" => Ok(DecayKind::Linear),
            "2sqrt" | "twosqrt" => Ok(DecayKind::TwoSqrt),
            _ => Err(Error::InvalidConfig(format!(
                "unknown decay `{s}` (none, linear, 2sqrt)"
            ))),
        }
    }
}

/// Decay family plus the year of the newest training documents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecaySpec {
    pub kind: DecayKind,
    pub reference_year: i32,
}

impl DecaySpec {
    pub fn none() -> Self {
        DecaySpec {
            kind: DecayKind::None,
            reference_year: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedItem {
    pub item_id: String,
    pub score: f64,
    /// 1-based.
    pub rank: usize,
}

/// Items by descending fused score; ties by ascending item id.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ItemRanking {
    pub entries: Vec<RankedItem>,
}

impl ItemRanking {
    pub fn from_scores(mut scores: Vec<(String, f64)>) -> Self {
        scores.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        ItemRanking {
            entries: scores
                .into_iter()
                .enumerate()
                .map(|(i, (item_id, score))| RankedItem {
                    item_id,
                    score,
                    rank: i + 1,
                })
                .collect(),
        }
    }

    pub fn rank_of(&self, item_id: &str) -> Option<usize> {
        self.entries.iter().find(|e| e.item_id == item_id).map(|e| e.rank)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Divide every score by the ranking's maximum.
pub fn normalize(ranking: &ScoredRanking) -> Result<ScoredRanking> {
    if ranking.is_empty() {
        return Ok(ScoredRanking::default());
    }
    let max = ranking
        .entries
        .iter()
        .map(|e| e.score)
        .fold(f64::NEG_INFINITY, f64::max);
    if max.is_nan() || max <= 0.0 {
        return Err(Error::NonPositiveMaximum(max));
    }
    let mut out = ranking.clone();
    for e in &mut out.entries {
        e.score /= max;
    }
    Ok(out)
}

/// Penalise each subprofile by its age relative to the reference year and
/// re-rank. `rep_years` is indexed by subprofile id.
pub fn apply_decay(ranking: &ScoredRanking, spec: &DecaySpec, rep_years: &[f64]) -> Result<ScoredRanking> {
    if spec.kind == DecayKind::None {
        return Ok(ranking.clone());
    }
    let decayed = ranking
        .entries
        .iter()
        .map(|e| {
            let rep_year = *rep_years
                .get(e.subprofile)
                .ok_or(Error::UnmappedSubprofile(e.subprofile))?;
            let penalty = spec.reference_year as f64 - rep_year;
            if penalty < 0.0 {
                return Err(Error::FutureRepresentativeYear {
                    rep_year,
                    reference_year: spec.reference_year,
                });
            }
            Ok((e.subprofile, spec.kind.apply(e.score, penalty)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ScoredRanking::from_scores(decayed))
}

/// Sum each item's subprofile scores, each divided by `log2(1 + rank)`.
/// `owner` is indexed by subprofile id.
pub fn comb_lg_dcs(ranking: &ScoredRanking, owner: &[String]) -> Result<ItemRanking> {
    let mut fused: BTreeMap<&str, f64> = BTreeMap::new();
    for e in &ranking.entries {
        let item = owner.get(e.subprofile).ok_or(Error::UnmappedSubprofile(e.subprofile))?;
        *fused.entry(item.as_str()).or_insert(0.0) += e.score / (1.0 + e.rank as f64).log2();
    }
    Ok(ItemRanking::from_scores(
        fused.into_iter().map(|(k, v)| (k.to_owned(), v)).collect(),
    ))
}

/// Check that `decay` makes sense for `strategy`.
pub fn check_decay(strategy: Strategy, decay: DecayKind) -> Result<()> {
    if decay != DecayKind::None && !strategy.supports_decay() {
        return Err(Error::InvalidConfig(format!(
            "decay `{decay}` is not defined for strategy `{strategy}`"
        )));
    }
    Ok(())
}

/// Score, normalize, decay and fuse: the full per-query pipeline.
///
/// Monolithic indexes have one unit per item, so their subprofile ranking
/// is relabelled directly.
pub fn recommend(index: &Index, query: &Query, lambda: f64, decay: &DecaySpec) -> Result<ItemRanking> {
    check_decay(index.strategy(), decay.kind)?;
    let ranking = index.score(query, lambda)?;
    let owner = index.subprofile_items();
    if index.strategy() == Strategy::Mono {
        return Ok(ItemRanking {
            entries: ranking
                .entries
                .iter()
                .map(|e| RankedItem {
                    item_id: owner[e.subprofile].clone(),
                    score: e.score,
                    rank: e.rank,
                })
                .collect(),
        });
    }
    let normalized = normalize(&ranking)?;
    let decayed = apply_decay(&normalized, decay, index.subprofile_rep_years())?;
    comb_lg_dcs(&decayed, owner)
}
