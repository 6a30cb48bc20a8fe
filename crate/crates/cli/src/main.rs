//! `venrec`: build, query and evaluate venue recommenders from the shell.

mod commands;
mod config;
mod store;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};
use venrec_core::SynthSpec;

use config::{ConfigArgs, UsageError};

#[derive(Parser)]
#[command(name = "venrec", version, about = "Content-based venue recommendation")]
struct Cli {
    /// TOML file of default settings; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads for scoring and LDA [default: all cores].
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a corpus, split it at the cutoff year and cache the tokens.
    Ingest(ConfigArgs),
    /// Generate a synthetic corpus and its ground-truth labels.
    Synth(SynthArgs),
    /// Build the subprofile set for a strategy.
    BuildProfiles(ConfigArgs),
    /// Index the subprofile set for a strategy.
    Index(ConfigArgs),
    /// Rank items for a free-text query.
    Recommend {
        #[command(flatten)]
        config: ConfigArgs,
        /// Prebuilt index; otherwise built from the configuration.
        #[arg(long)]
        index: Option<PathBuf>,
        /// Query text file, or `-` for stdin.
        #[arg(long)]
        text: PathBuf,
        /// Number of items to print.
        #[arg(long, default_value_t = 10)]
        top: usize,
    },
    /// Query every test article and report R@1, R@5 and MRR@40.
    Evaluate {
        #[command(flatten)]
        config: ConfigArgs,
        /// One system per line as `key=value` pairs over the base settings.
        #[arg(long)]
        grid: Option<PathBuf>,
        /// Report path [default: content-addressed under the artifact dir].
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// McNemar test on the R@1 hits of two outcome files.
    Compare { a: PathBuf, b: PathBuf },
}

#[derive(clap::Args)]
struct SynthArgs {
    /// Corpus output path.
    #[arg(long)]
    out: PathBuf,
    /// Label output path [default: the corpus path with extension `.truth.jsonl`].
    #[arg(long)]
    truth: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    items: Option<usize>,
    #[arg(long)]
    topics: Option<usize>,
    #[arg(long)]
    periods: Option<usize>,
    /// Topics each item covers per period; they rotate by one each period.
    #[arg(long)]
    topics_per_item: Option<usize>,
    #[arg(long)]
    docs_per_period: Option<usize>,
    #[arg(long)]
    vocab_per_topic: Option<usize>,
    #[arg(long)]
    doc_len: Option<usize>,
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long)]
    niche: Option<f64>,
    #[arg(long)]
    start_year: Option<i32>,
    #[arg(long)]
    years_per_period: Option<i32>,
}

impl SynthArgs {
    fn spec(&self) -> SynthSpec {
        let d = SynthSpec::default();
        let n_items = self.items.unwrap_or(d.n_items);
        let n_topics = self.topics.unwrap_or(d.n_topics_true);
        let n_periods = self.periods.unwrap_or(d.n_periods);
        SynthSpec {
            n_items,
            n_topics_true: n_topics,
            n_periods,
            docs_per_item_per_period: self.docs_per_period.unwrap_or(d.docs_per_item_per_period),
            vocab_per_topic: self.vocab_per_topic.unwrap_or(d.vocab_per_topic),
            drift: SynthSpec::rotating_drift(
                n_items,
                n_topics,
                n_periods,
                self.topics_per_item.unwrap_or(2).min(n_topics),
            ),
            noise_rate: self.noise.unwrap_or(d.noise_rate),
            seed: self.seed.unwrap_or(d.seed),
            doc_len: self.doc_len.unwrap_or(d.doc_len),
            start_year: self.start_year.unwrap_or(d.start_year),
            years_per_period: self.years_per_period.unwrap_or(d.years_per_period),
            zipf_exponent: d.zipf_exponent,
            niche_rate: self.niche.unwrap_or(d.niche_rate),
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(config::usage("--jobs must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global()?;
    }
    let file = match &cli.config {
        Some(path) => ConfigArgs::from_file(path)?,
        None => ConfigArgs::default(),
    };
    match cli.command {
        Command::Ingest(flags) => commands::cmd_ingest(&file.overlay(flags)),
        Command::Synth(args) => commands::cmd_synth(&args.spec(), &args.out, args.truth.as_deref()),
        Command::BuildProfiles(flags) => commands::cmd_build_profiles(&file.overlay(flags)),
        Command::Index(flags) => commands::cmd_index(&file.overlay(flags)),
        Command::Recommend {
            config,
            index,
            text,
            top,
        } => commands::cmd_recommend(&file.overlay(config), index.as_deref(), &text, top),
        Command::Evaluate { config, grid, out } => {
            commands::cmd_evaluate(&file.overlay(config), grid.as_deref(), out.as_deref())
        }
        Command::Compare { a, b } => commands::cmd_compare(&a, &b),
    }
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            let first = text.lines().next().unwrap_or_default().trim_start_matches("error: ");
            eprintln!("error: usage: {}", one_line(first));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is::<UsageError>() => {
            eprintln!("error: usage: {}", one_line(&e.to_string()));
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {}", one_line(&format!("{e:#}")));
            ExitCode::FAILURE
        }
    }
}
