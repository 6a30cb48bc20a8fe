//! Content-based recommendation of items (publication venues) that are
//! described by the documents they published.
//!
//! Each item is represented by one or more *subprofiles*, each a
//! concatenation of some of its training documents. The grouping strategy
//! decides how documents are split: not at all ([`Strategy::Mono`]), one per
//! document ([`Strategy::Atomic`]), by LDA topic, by publication period, or by
//! both. Subprofiles are indexed and scored with a Jelinek-Mercer smoothed
//! query-likelihood model, optionally penalised by age, and fused back into
//! an item ranking.
//!
//! The usual flow:
//!
//! 1. [`corpus::load_corpus`] and [`corpus::split_train_test`]
//! 2. [`profiles`] builders (with [`topicmodel::fit_lda`] where needed)
//! 3. [`retrieval::build_index`]
//! 4. [`fusion::recommend`] per query, or [`eval::evaluate`] over a test set

mod artifact;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod fusion;
pub mod pipeline;
pub mod profiles;
pub mod retrieval;
pub mod synth;
pub mod topicmodel;

pub use corpus::{Corpus, Document, TokenizedDoc, Vocabulary, VocabularyParams};
pub use error::{Error, Result};
pub use eval::{EvalReport, McNemar, QueryOutcome, SystemLabel};
pub use fusion::{DecayKind, DecaySpec, ItemRanking};
pub use pipeline::{StrategyParams, System, SystemConfig};
pub use profiles::{Strategy, Subprofile, SubprofileSet, TimeGrid};
pub use retrieval::{Index, Query, ScoredRanking};
pub use synth::{generate, GroundTruth, SynthSpec};
pub use topicmodel::{LdaConfig, TopicModel};
