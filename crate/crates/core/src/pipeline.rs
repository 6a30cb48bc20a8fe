//! A configured recommender: strategy parameters in, subprofiles and an
//! index out.

use serde::{Deserialize, Serialize};

use crate::corpus::{build_vocabulary, default_analyzer, Corpus, TokenizedDoc, VocabularyParams};
use crate::error::{Error, Result};
use crate::fusion::{check_decay, recommend, DecayKind, DecaySpec, ItemRanking};
use crate::profiles::{
    build_atomic, build_mono, build_random, build_temp_top, build_temporal, build_top_temp, build_topical, Strategy,
    SubprofileSet, TimeGrid,
};
use crate::retrieval::{build_index_from_tokens, Index, Query};
use crate::topicmodel::{fit_lda, LdaConfig};

/// Strategy plus exactly the parameters it needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "strategy", rename_all = "lowercase")]
pub enum StrategyParams {
    Mono,
    Atomic,
    Top { lda: LdaConfig },
    Temp { grid: TimeGrid },
    TopTemp { lda: LdaConfig, grid: TimeGrid },
    TempTop { lda: LdaConfig, grid: TimeGrid },
    Random { n_parts: usize, seed: u64 },
}

impl StrategyParams {
    pub fn strategy(&self) -> Strategy {
        match self {
            StrategyParams::Mono => Strategy::Mono,
            StrategyParams::Atomic => Strategy::Atomic,
            StrategyParams::Top { .. } => Strategy::Top,
            StrategyParams::Temp { .. } => Strategy::Temp,
            StrategyParams::TopTemp { .. } => Strategy::TopTemp,
            StrategyParams::TempTop { .. } => Strategy::TempTop,
            StrategyParams::Random { .. } => Strategy::Random,
        }
    }

    pub fn lda(&self) -> Option<&LdaConfig> {
        match self {
            StrategyParams::Top { lda } | StrategyParams::TopTemp { lda, .. } | StrategyParams::TempTop { lda, .. } => {
                Some(lda)
            }
            _ => None,
        }
    }

    pub fn grid(&self) -> Option<&TimeGrid> {
        match self {
            StrategyParams::Temp { grid }
            | StrategyParams::TopTemp { grid, .. }
            | StrategyParams::TempTop { grid, .. } => Some(grid),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(lda) = self.lda() {
            lda.validate()?;
        }
        if let StrategyParams::Random { n_parts: 0, .. } = self {
            return Err(Error::InvalidConfig("n_parts must be >= 1".into()));
        }
        Ok(())
    }
}

/// Everything needed to build and query one system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub profiles: StrategyParams,
    pub vocabulary: VocabularyParams,
    /// Jelinek-Mercer collection weight.
    pub lambda: f64,
    pub decay: DecayKind,
    /// Defaults to the newest training year.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_year: Option<i32>,
}

impl SystemConfig {
    pub fn new(profiles: StrategyParams) -> Self {
        SystemConfig {
            profiles,
            vocabulary: VocabularyParams::default(),
            lambda: 0.1,
            decay: DecayKind::None,
            reference_year: None,
        }
    }

    pub fn with_decay(mut self, decay: DecayKind) -> Self {
        self.decay = decay;
        self
    }

    pub fn with_vocabulary(mut self, vocabulary: VocabularyParams) -> Self {
        self.vocabulary = vocabulary;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.profiles.validate()?;
        if self.profiles.lda().is_some() {
            self.vocabulary.validate()?;
        }
        if !(self.lambda > 0.0 && self.lambda < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "lambda must be in (0, 1), got {}",
                self.lambda
            )));
        }
        check_decay(self.profiles.strategy(), self.decay)
    }
}

/// Build the subprofile set for `params`. `tokens` must be aligned with
/// `train.documents()`.
pub fn build_subprofiles(
    train: &Corpus,
    tokens: &[TokenizedDoc],
    params: &StrategyParams,
    vocabulary: VocabularyParams,
) -> Result<SubprofileSet> {
    params.validate()?;
    let global_model = |lda: &LdaConfig| {
        let vocab = build_vocabulary(tokens, vocabulary)?;
        fit_lda(tokens, &vocab, lda)
    };
    let mut set = match params {
        StrategyParams::Mono => build_mono(train),
        StrategyParams::Atomic => build_atomic(train),
        StrategyParams::Top { lda } => build_topical(train, &global_model(lda)?)?,
        StrategyParams::Temp { grid } => build_temporal(train, grid)?,
        StrategyParams::TopTemp { lda, grid } => {
            grid.covers(train)?;
            build_top_temp(train, &global_model(lda)?, grid)?
        }
        StrategyParams::TempTop { lda, grid } => build_temp_top(train, tokens, grid, lda, vocabulary)?,
        StrategyParams::Random { n_parts, seed } => build_random(train, *n_parts, *seed)?,
    };
    if params.lda().is_some() {
        set.provenance.vocabulary = Some(vocabulary);
    }
    Ok(set)
}

/// A built system ready to answer queries.
#[derive(Debug, Clone)]
pub struct System {
    config: SystemConfig,
    decay: DecaySpec,
    index: Index,
}

impl System {
    /// Tokenize `train`, build subprofiles and index them.
    pub fn build(train: &Corpus, config: SystemConfig) -> Result<Self> {
        config.validate()?;
        let tokens = train.tokenize_all(default_analyzer());
        let set = build_subprofiles(train, &tokens, &config.profiles, config.vocabulary)?;
        let index = build_index_from_tokens(&set, &tokens)?;
        let reference_year = config.reference_year.unwrap_or(train.year_range().1);
        Self::from_index(config, index, reference_year)
    }

    /// Wrap an index built elsewhere.
    pub fn from_index(config: SystemConfig, index: Index, reference_year: i32) -> Result<Self> {
        config.validate()?;
        if index.strategy() != config.profiles.strategy() {
            return Err(Error::ModelMismatch(format!(
                "index built for `{}`, config asks for `{}`",
                index.strategy(),
                config.profiles.strategy()
            )));
        }
        let decay = DecaySpec {
            kind: config.decay,
            reference_year: config.reference_year.unwrap_or(reference_year),
        };
        Ok(System { config, decay, index })
    }

    pub fn config(&self) -> &SystemConfig {
        &self.config
    }

    pub fn index(&self) -> &Index {
        &self.index
    }

    pub fn decay(&self) -> &DecaySpec {
        &self.decay
    }

    pub fn recommend(&self, query: &Query) -> Result<ItemRanking> {
        recommend(&self.index, query, self.config.lambda, &self.decay)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Document;

    fn doc(id: &str, venue: &str, year: i32, text: &str) -> Document {
        Document {
            doc_id: id.into(),
            venue_id: venue.into(),
            year,
            title: text.into(),
            abstract_text: String::new(),
            keywords: vec![],
        }
    }

    fn train() -> Corpus {
        Corpus::new(vec![
            doc("a1", "A", 2010, "protein folding kinetics"),
            doc("a2", "A", 2012, "protein structure folding"),
            doc("b1", "B", 2010, "galaxy cluster survey"),
            doc("b2", "B", 2013, "galaxy redshift survey"),
        ])
        .unwrap()
    }

    #[test]
    fn strategy_params_round_trip_through_json() {
        let p = StrategyParams::TempTop {
            lda: LdaConfig::new(4, 9),
            grid: TimeGrid::new(vec![2010, 2012, 2014]).unwrap(),
        };
        let json = serde_json::to_string(&p).unwrap();
        assert!(json.contains("\"strategy\":\"temptop\""));
        assert_eq!(serde_json::from_str::<StrategyParams>(&json).unwrap(), p);
    }

    #[test]
    fn mono_system_ranks_own_venue_first() {
        let system = System::build(&train(), SystemConfig::new(StrategyParams::Mono)).unwrap();
        let ranking = system.recommend(&Query::from_text("q", "protein folding")).unwrap();
        assert_eq!(ranking.entries[0].item_id, "A");
        let ranking = system.recommend(&Query::from_text("q", "galaxy survey")).unwrap();
        assert_eq!(ranking.entries[0].item_id, "B");
    }

    #[test]
    fn reference_year_defaults_to_newest_training_year() {
        let grid = TimeGrid::new(vec![2010, 2012, 2014]).unwrap();
        let config = SystemConfig::new(StrategyParams::Temp { grid }).with_decay(DecayKind::TwoSqrt);
        let system = System::build(&train(), config).unwrap();
        assert_eq!(system.decay().reference_year, 2013);
        assert_eq!(system.decay().kind, DecayKind::TwoSqrt);
    }

    #[test]
    fn rejects_decay_on_mono_and_bad_lambda() {
        let config = SystemConfig::new(StrategyParams::Mono).with_decay(DecayKind::Linear);
        assert!(matches!(config.validate(), Err(Error::InvalidConfig(_))));
        let mut config = SystemConfig::new(StrategyParams::Atomic);
        config.lambda = 1.0;
        assert!(config.validate().is_err());
        let config = SystemConfig::new(StrategyParams::Random { n_parts: 0, seed: 1 });
        assert!(config.validate().is_err());
    }

    #[test]
    fn from_index_checks_strategy() {
        let t = train();
        let tokens = t.tokenize_all(default_analyzer());
        let set = build_mono(&t);
        let index = build_index_from_tokens(&set, &tokens).unwrap();
        let err = System::from_index(SystemConfig::new(StrategyParams::Atomic), index, 2013);
        assert!(matches!(err, Err(Error::ModelMismatch(_))));
    }
}
