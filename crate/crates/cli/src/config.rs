//! Run configuration: a TOML key-value file overlaid by command-line flags,
//! resolved into a validated [`RunConfig`].

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::Args;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use venrec_core::fusion::check_decay;
use venrec_core::{DecayKind, LdaConfig, Strategy, StrategyParams, SystemConfig, TimeGrid, VocabularyParams};

/// Bad or missing arguments; reported with exit status 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

/// Every configurable setting, all optional. Used for the config file,
/// the flags, and `--grid` rows alike.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct ConfigArgs {
    /// Corpus file, one JSON record per line.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Directory for cached artifacts [default: artifacts].
    #[arg(long)]
    pub artifacts: Option<PathBuf>,
    /// Documents from this year on form the test set.
    #[arg(long)]
    pub cutoff: Option<i32>,
    /// mono, atomic, top, temp, toptemp, temptop or random.
    #[arg(long)]
    pub strategy: Option<String>,
    /// Number of LDA topics.
    #[arg(long)]
    pub k: Option<usize>,
    /// Comma-separated period boundaries, e.g. 2007,2009,2011.
    #[arg(long)]
    pub time_grid: Option<String>,
    /// Parts for the random strategy [default: number of grid periods].
    #[arg(long)]
    pub n_parts: Option<usize>,
    /// Jelinek-Mercer collection weight [default: 0.1].
    #[arg(long)]
    pub lambda: Option<f64>,
    /// none, linear or 2sqrt [default: none].
    #[arg(long)]
    pub decay: Option<String>,
    /// Year penalties are measured from [default: newest training year].
    #[arg(long)]
    pub reference_year: Option<i32>,
    /// Seed for LDA and random partitions [default: 0].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Gibbs sweeps [default: 1000].
    #[arg(long)]
    pub iterations: Option<usize>,
    /// Discarded initial sweeps [default: 200].
    #[arg(long)]
    pub burn_in: Option<usize>,
    /// Document-topic prior [default: 50/k].
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Topic-term prior [default: 0.01].
    #[arg(long)]
    pub beta: Option<f64>,
    /// Minimum document frequency of LDA terms [default: 750].
    #[arg(long)]
    pub min_df: Option<usize>,
    /// Maximum document-frequency ratio of LDA terms [default: 0.9].
    #[arg(long)]
    pub max_df_ratio: Option<f64>,
    /// LDA vocabulary cap [default: 5000].
    #[arg(long)]
    pub max_terms: Option<usize>,
}

macro_rules! overlay_fields {
    ($base:ident, $top:ident; $($f:ident),*) => {
        ConfigArgs { $($f: $top.$f.or($base.$f)),* }
    };
}

impl ConfigArgs {
    /// Values in `top` win.
    pub fn overlay(self, top: ConfigArgs) -> ConfigArgs {
        let base = self;
        overlay_fields!(base, top; corpus, artifacts, cutoff, strategy, k, time_grid, n_parts, lambda, decay,
            reference_year, seed, iterations, burn_in, alpha, beta, min_df, max_df_ratio, max_terms)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        toml::from_str(&text).map_err(|e| usage(format!("config {}: {}", path.display(), e.message())))
    }

    /// One `--grid` row: whitespace-separated `key=value` pairs.
    pub fn from_row(row: &str) -> Result<Self> {
        let mut table = toml::Table::new();
        for pair in row.split_whitespace() {
            let (key, value) = pair
                .split_once('=')
                .ok_or_else(|| usage(format!("grid row entry `{pair}` is not key=value")))?;
            let value = if let Ok(i) = value.parse::<i64>() {
                toml::Value::Integer(i)
            } else if let Ok(f) = value.parse::<f64>() {
                toml::Value::Float(f)
            } else {
                toml::Value::String(value.to_owned())
            };
            table.insert(key.replace('-', "_"), value);
        }
        table
            .try_into()
            .map_err(|e: toml::de::Error| usage(format!("grid row `{row}`: {}", e.message())))
    }

    pub fn strategy(&self) -> Result<Strategy> {
        let s = self
            .strategy
            .as_deref()
            .ok_or_else(|| usage("--strategy is required"))?;
        s.parse().map_err(|e: venrec_core::Error| usage(e.to_string()))
    }

    pub fn resolve(&self) -> Result<RunConfig> {
        let corpus = self.corpus.clone().ok_or_else(|| usage("--corpus is required"))?;
        let cutoff = self.cutoff.ok_or_else(|| usage("--cutoff is required"))?;
        let system = self.system()?;
        Ok(RunConfig {
            corpus,
            artifacts: self.artifacts.clone().unwrap_or_else(|| PathBuf::from("artifacts")),
            cutoff,
            system,
        })
    }

    pub fn system(&self) -> Result<SystemConfig> {
        let strategy = self.strategy()?;
        let seed = self.seed.unwrap_or(0);
        let grid = || -> Result<TimeGrid> {
            let g = self
                .time_grid
                .as_deref()
                .ok_or_else(|| usage(format!("strategy {strategy} requires --time-grid")))?;
            g.parse().map_err(|e: venrec_core::Error| usage(e.to_string()))
        };
        let lda = || -> Result<LdaConfig> {
            let k = self
                .k
                .ok_or_else(|| usage(format!("strategy {strategy} requires --k")))?;
            let mut lda = LdaConfig::new(k, seed);
            lda.iterations = self.iterations.unwrap_or(lda.iterations);
            lda.burn_in = self.burn_in.unwrap_or(lda.burn_in);
            lda.alpha = self.alpha.unwrap_or(lda.alpha);
            lda.beta = self.beta.unwrap_or(lda.beta);
            lda.validate().map_err(|e| usage(e.to_string()))?;
            Ok(lda)
        };
        let profiles = match strategy {
            Strategy::Mono => StrategyParams::Mono,
            Strategy::Atomic => StrategyParams::Atomic,
            Strategy::Top => StrategyParams::Top { lda: lda()? },
            Strategy::Temp => StrategyParams::Temp { grid: grid()? },
            Strategy::TopTemp => StrategyParams::TopTemp {
                lda: lda()?,
                grid: grid()?,
            },
            Strategy::TempTop => StrategyParams::TempTop {
                lda: lda()?,
                grid: grid()?,
            },
            Strategy::Random => {
                let n_parts = match (self.n_parts, &self.time_grid) {
                    (Some(n), _) => n,
                    (None, Some(_)) => grid()?.h(),
                    (None, None) => return Err(usage("strategy random requires --n-parts or --time-grid")),
                };
                StrategyParams::Random { n_parts, seed }
            }
        };
        let defaults = VocabularyParams::default();
        let vocabulary = VocabularyParams {
            min_df: self.min_df.unwrap_or(defaults.min_df),
            max_df_ratio: self.max_df_ratio.unwrap_or(defaults.max_df_ratio),
            max_terms: self.max_terms.unwrap_or(defaults.max_terms),
        };
        let decay: DecayKind = match &self.decay {
            Some(d) => d.parse().map_err(|e: venrec_core::Error| usage(e.to_string()))?,
            None => DecayKind::None,
        };
        check_decay(strategy, decay).map_err(|e| usage(e.to_string()))?;
        let mut config = SystemConfig::new(profiles)
            .with_vocabulary(vocabulary)
            .with_decay(decay);
        config.lambda = self.lambda.unwrap_or(config.lambda);
        config.reference_year = self.reference_year;
        config.validate().map_err(|e| usage(e.to_string()))?;
        Ok(config)
    }
}

/// Fully resolved settings for one system on one corpus split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub corpus: PathBuf,
    pub artifacts: PathBuf,
    pub cutoff: i32,
    pub system: SystemConfig,
}

/// Short content hash of any serializable value.
pub fn digest(value: &impl Serialize) -> String {
    let bytes = serde_json::to_vec(value).expect("serializable");
    hex::encode(&Sha256::digest(&bytes)[..8])
}

pub fn file_digest(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}
