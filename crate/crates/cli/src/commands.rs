use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use log::{info, warn};
use serde::{Deserialize, Serialize};
use serde_json::json;
use venrec_core::corpus::{load_corpus, split_train_test, write_corpus};
use venrec_core::eval::{compare, evaluate, read_outcomes, write_outcomes, TSV_HEADER};
use venrec_core::pipeline::build_subprofiles;
use venrec_core::retrieval::build_index_from_tokens;
use venrec_core::synth::generate;
use venrec_core::{
    Corpus, DecayKind, EvalReport, Index, Query, StrategyParams, SubprofileSet, SynthSpec, System, SystemConfig,
    TokenizedDoc, VocabularyParams,
};

use crate::config::{digest, file_digest, usage, ConfigArgs, RunConfig};
use crate::store::{write_atomic, Store};

/// A validated, tokenized train/test split.
pub struct Split {
    pub key: String,
    pub train: Corpus,
    pub test: Corpus,
    pub tokens: Vec<TokenizedDoc>,
}

#[derive(Serialize, Deserialize)]
struct SplitManifest {
    format: String,
    corpus: PathBuf,
    sha256: String,
    cutoff: i32,
    n_train: usize,
    n_test: usize,
    rejected: usize,
}

/// Validate, split and tokenize the corpus unless a matching split is cached.
pub fn ingest(run: &RunConfig) -> Result<(Store, String)> {
    let store = Store::open(&run.artifacts)?;
    let sha256 = file_digest(&run.corpus)?;
    let key = digest(&(&sha256, run.cutoff));
    let manifest_path = store.path("split", &key, "json");
    if manifest_path.exists() {
        info!("reusing split {}", manifest_path.display());
        return Ok((store, key));
    }
    let loaded = load_corpus(&run.corpus)?;
    for r in &loaded.rejected {
        warn!("{}: line {}: {}", run.corpus.display(), r.line, r.reason);
    }
    let (train, test) = split_train_test(&loaded.corpus, run.cutoff)?;
    let tokens = train.tokenize_all(venrec_core::corpus::default_analyzer());
    write_atomic(&store.path("split", &key, "train.jsonl"), |out| {
        Ok(write_corpus(train.documents(), out)?)
    })?;
    write_atomic(&store.path("split", &key, "test.jsonl"), |out| {
        Ok(write_corpus(test.documents(), out)?)
    })?;
    write_atomic(&store.path("split", &key, "tokens.jsonl"), |out| {
        for t in &tokens {
            serde_json::to_writer(&mut *out, t)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    })?;
    let manifest = SplitManifest {
        format: "venrec-split".into(),
        corpus: run.corpus.clone(),
        sha256,
        cutoff: run.cutoff,
        n_train: train.len(),
        n_test: test.len(),
        rejected: loaded.rejected.len(),
    };
    write_atomic(&manifest_path, |out| Ok(serde_json::to_writer_pretty(out, &manifest)?))?;
    Ok((store, key))
}

pub fn load_split(store: &Store, key: &str) -> Result<Split> {
    let train = load_corpus(&store.path("split", key, "train.jsonl"))?.corpus;
    let test = load_corpus(&store.path("split", key, "test.jsonl"))?.corpus;
    let path = store.path("split", key, "tokens.jsonl");
    let file = File::open(&path).with_context(|| format!("cannot read {}", path.display()))?;
    let tokens = BufReader::new(file)
        .lines()
        .map(|l| Ok(serde_json::from_str(&l?)?))
        .collect::<Result<Vec<TokenizedDoc>>>()?;
    if tokens.len() != train.len() {
        bail!("token cache {} does not match its split", path.display());
    }
    Ok(Split {
        key: key.to_owned(),
        train,
        test,
        tokens,
    })
}

/// What an index was built from; stored inside the index artifact.
#[derive(Serialize, Deserialize)]
struct IndexProvenance {
    split: String,
    profiles: StrategyParams,
    vocabulary: VocabularyParams,
    reference_year: i32,
}

fn profiles_key(split: &Split, system: &SystemConfig) -> String {
    let vocabulary = system.profiles.lda().map(|_| system.vocabulary);
    digest(&(&split.key, &system.profiles, vocabulary))
}

/// Build (or reuse) the subprofile set for `run`.
pub fn build_profiles(store: &Store, split: &Split, system: &SystemConfig) -> Result<PathBuf> {
    let key = profiles_key(split, system);
    let path = store.path("profiles", &key, "jsonl");
    if path.exists() {
        info!("reusing profiles {}", path.display());
        return Ok(path);
    }
    let set = build_subprofiles(&split.train, &split.tokens, &system.profiles, system.vocabulary)?;
    let echo = json!({
        "split": split.key,
        "profiles": system.profiles,
        "vocabulary": system.vocabulary,
    });
    write_atomic(&path, |out| Ok(set.write_jsonl(out, &echo)?))?;
    Ok(path)
}

/// Build (or reuse) the index over the subprofiles for `run`.
pub fn build_index(store: &Store, split: &Split, system: &SystemConfig) -> Result<PathBuf> {
    let profiles = build_profiles(store, split, system)?;
    let key = profiles_key(split, system);
    let path = store.path("index", &key, "bin");
    if path.exists() {
        info!("reusing index {}", path.display());
        return Ok(path);
    }
    let file = File::open(&profiles).with_context(|| format!("cannot read {}", profiles.display()))?;
    let set = SubprofileSet::read_jsonl(BufReader::new(file))?;
    let mut index = build_index_from_tokens(&set, &split.tokens)?;
    let provenance = IndexProvenance {
        split: split.key.clone(),
        profiles: system.profiles.clone(),
        vocabulary: system.vocabulary,
        reference_year: split.train.year_range().1,
    };
    index.set_provenance(serde_json::to_string(&provenance)?);
    let tmp = path.with_extension("bin.tmp");
    index.save(&tmp)?;
    std::fs::rename(&tmp, &path)?;
    Ok(path)
}

fn load_system(index_path: &Path, overrides: &ConfigArgs) -> Result<System> {
    let index = Index::load(index_path)?;
    let provenance: IndexProvenance = serde_json::from_str(index.provenance())
        .with_context(|| format!("{} carries no build provenance", index_path.display()))?;
    let mut config = SystemConfig::new(provenance.profiles.clone()).with_vocabulary(provenance.vocabulary);
    config.lambda = overrides.lambda.unwrap_or(config.lambda);
    config.reference_year = overrides.reference_year;
    if let Some(d) = &overrides.decay {
        config.decay = d.parse::<DecayKind>().map_err(|e| usage(e.to_string()))?;
    }
    config.validate().map_err(|e| usage(e.to_string()))?;
    Ok(System::from_index(config, index, provenance.reference_year)?)
}

pub fn cmd_ingest(args: &ConfigArgs) -> Result<()> {
    let corpus = args.corpus.clone().ok_or_else(|| usage("--corpus is required"))?;
    let cutoff = args.cutoff.ok_or_else(|| usage("--cutoff is required"))?;
    let run = RunConfig {
        corpus,
        artifacts: args.artifacts.clone().unwrap_or_else(|| "artifacts".into()),
        cutoff,
        system: SystemConfig::new(StrategyParams::Mono),
    };
    let (store, key) = ingest(&run)?;
    println!("{}", store.path("split", &key, "json").display());
    Ok(())
}

pub fn cmd_build_profiles(args: &ConfigArgs) -> Result<()> {
    let run = args.resolve()?;
    let (store, key) = ingest(&run)?;
    let split = load_split(&store, &key)?;
    println!("{}", build_profiles(&store, &split, &run.system)?.display());
    Ok(())
}

pub fn cmd_index(args: &ConfigArgs) -> Result<()> {
    let run = args.resolve()?;
    let (store, key) = ingest(&run)?;
    let split = load_split(&store, &key)?;
    println!("{}", build_index(&store, &split, &run.system)?.display());
    Ok(())
}

pub fn cmd_recommend(args: &ConfigArgs, index: Option<&Path>, text: &Path, top: usize) -> Result<()> {
    if top == 0 {
        return Err(usage("--top must be at least 1"));
    }
    let index_path = match index {
        Some(p) => p.to_owned(),
        None => {
            let run = args.resolve()?;
            let (store, key) = ingest(&run)?;
            build_index(&store, &load_split(&store, &key)?, &run.system)?
        }
    };
    let system = load_system(&index_path, args)?;
    let mut query_text = String::new();
    if text == Path::new("-") {
        std::io::stdin().read_to_string(&mut query_text)?;
    } else {
        query_text = std::fs::read_to_string(text).with_context(|| format!("cannot read {}", text.display()))?;
    }
    let ranking = system.recommend(&Query::from_text("query", &query_text))?;
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    for e in ranking.entries.iter().take(top) {
        writeln!(out, "{}\t{}\t{:.6}", e.rank, e.item_id, e.score)?;
    }
    Ok(())
}

pub fn cmd_evaluate(base: &ConfigArgs, grid: Option<&Path>, out: Option<&Path>) -> Result<()> {
    let rows = match grid {
        None => vec![base.clone()],
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
            let rows = text
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(|l| Ok(base.clone().overlay(ConfigArgs::from_row(l)?)))
                .collect::<Result<Vec<_>>>()?;
            if rows.is_empty() {
                return Err(usage(format!("grid file {} has no rows", path.display())));
            }
            rows
        }
    };
    let runs = rows.iter().map(ConfigArgs::resolve).collect::<Result<Vec<_>>>()?;

    let mut reports: Vec<(RunConfig, EvalReport, PathBuf)> = Vec::new();
    for run in runs {
        let (store, key) = ingest(&run)?;
        let split = load_split(&store, &key)?;
        let index_path = build_index(&store, &split, &run.system)?;
        let system = load_system(&index_path, &overrides_of(&run))?;
        let report = evaluate(&system, &split.test)?;
        let outcomes = store.path("outcomes", &digest(&(&split.key, &run.system)), "tsv");
        write_atomic(&outcomes, |w| Ok(write_outcomes(&report.outcomes, w)?))?;
        eprintln!("outcomes\t{}", outcomes.display());
        reports.push((run, report, outcomes));
    }

    let mut table = String::new();
    table.push_str(TSV_HEADER);
    table.push('\n');
    for (_, report, _) in &reports {
        table.push_str(&report.tsv_row());
        table.push('\n');
    }
    let store = Store::open(&reports[0].0.artifacts)?;
    let configs: Vec<&RunConfig> = reports.iter().map(|(r, _, _)| r).collect();
    let key = digest(&configs);
    let out = out.map_or_else(|| store.path("report", &key, "tsv"), Path::to_owned);
    write_atomic(&out, |w| Ok(w.write_all(table.as_bytes())?))?;
    let echo = json!({
        "report": out,
        "runs": reports.iter().map(|(run, _, outcomes)| json!({"config": run, "outcomes": outcomes})).collect::<Vec<_>>(),
    });
    write_atomic(&store.path("report", &key, "json"), |w| {
        Ok(serde_json::to_writer_pretty(w, &echo)?)
    })?;
    print!("{table}");
    Ok(())
}

/// The query-time settings of a resolved run, as flag overrides.
fn overrides_of(run: &RunConfig) -> ConfigArgs {
    ConfigArgs {
        lambda: Some(run.system.lambda),
        decay: Some(run.system.decay.name().to_owned()),
        reference_year: run.system.reference_year,
        ..Default::default()
    }
}

pub fn cmd_compare(a: &Path, b: &Path) -> Result<()> {
    let read = |p: &Path| -> Result<_> {
        let file = File::open(p).with_context(|| format!("cannot read {}", p.display()))?;
        Ok(read_outcomes(BufReader::new(file))?)
    };
    let t = compare(&read(a)?, &read(b)?)?;
    println!("b\tc\tstatistic\tp_value");
    println!("{}\t{}\t{:.6}\t{:.6}", t.b, t.c, t.statistic, t.p_value);
    Ok(())
}

pub fn cmd_synth(spec: &SynthSpec, out: &Path, truth: Option<&Path>) -> Result<()> {
    let (corpus, labels) = generate(spec).map_err(|e| usage(e.to_string()))?;
    write_atomic(out, |w| Ok(write_corpus(corpus.documents(), w)?))?;
    let truth = truth.map_or_else(|| out.with_extension("truth.jsonl"), Path::to_owned);
    write_atomic(&truth, |w| Ok(labels.write_jsonl(w)?))?;
    eprintln!("grid\t{}", spec.grid());
    println!("{}", out.display());
    Ok(())
}
