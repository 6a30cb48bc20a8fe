use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the recommendation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("zero well-formed records ({rejected} rejected)")]
    EmptyCorpus { rejected: usize },

    #[error("duplicate doc_id `{0}`")]
    DuplicateDocId(String),

    #[error("empty {0} partition")]
    EmptyPartition(&'static str),

    #[error("cutoff year {cutoff} outside corpus range [{min}, {max}]")]
    CutoffOutOfRange { cutoff: i32, min: i32, max: i32 },

    #[error("all terms pruned (min_df={min_df}, max_df_ratio={max_df_ratio}, max_terms={max_terms})")]
    VocabularyEmpty {
        min_df: usize,
        max_df_ratio: f64,
        max_terms: usize,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("all documents are empty after vocabulary restriction")]
    AllDocumentsEmpty,

    #[error("document has no in-vocabulary tokens")]
    NoVocabularyTokens,

    #[error("unknown document `{0}`")]
    UnknownDocument(String),

    #[error("topic model does not match the training documents: {0}")]
    ModelMismatch(String),

    #[error("temporal period {0} has no documents")]
    EmptyPeriod(usize),

    #[error("year {year} outside time grid [{start}, {end})")]
    YearOutsideGrid { year: i32, start: i32, end: i32 },

    #[error("subprofile set is empty")]
    EmptySubprofileSet,

    #[error("subprofile {0} has no owning item")]
    UnmappedSubprofile(usize),

    #[error("cannot normalize a ranking whose maximum score is {0}")]
    NonPositiveMaximum(f64),

    #[error("representative year {rep_year} is after reference year {reference_year}")]
    FutureRepresentativeYear { rep_year: f64, reference_year: i32 },

    #[error("empty outcome set")]
    EmptyOutcomes,

    #[error("paired samples differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),

    #[error("query sets differ: {0}")]
    QueryMismatch(String),

    #[error("malformed artifact: {0}")]
    Artifact(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
