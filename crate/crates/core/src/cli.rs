//! Command-line front end. Each subcommand reads its inputs, calls the
//! library, and writes outputs atomically.
//!
//! Exit codes: 0 success, 1 invalid input or usage, 2 I/O failure.

use std::collections::HashMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand};

use crate::agreement::{disagreements, disagreements_tsv, kappa};
use crate::bilou::{Tag, TaggedSequence};
use crate::corpus::{chronological_split, load_records, save_records, SplitSpec};
use crate::crf::{load_model, predict_corpus, save_model, train_logged, TrainConfig, MODEL_FORMAT_VERSION};
use crate::enrichment::{emit_table_patch, enrich, render_candidates, render_patch};
use crate::error::{Error, Result};
use crate::evaluator::score;
use crate::io::{read_to_string, write_atomic};
use crate::lookup::{load_table, tag_corpus, LookupTable, TABLE_FORMAT_VERSION};
use crate::pipeline::{pipeline_report, StageOutputs};
use crate::synth::{generate, SynthSettings};
use crate::tokenizer::tokenize;
use crate::{conll, Crf64};

/// Environment variable naming a default lookup-table file.
pub const TABLE_ENV: &str = "DCNER_TABLE";

#[derive(Debug, Parser)]
#[command(name = "dcner", about = "Drug mention extraction from death-certificate text")]
pub struct Cli {
    /// Seed for commands that use randomness.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Suppress summaries on standard output.
    #[arg(long, short, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tokenize a records file into untagged CoNLL.
    Tokenize {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Chronological train/validation/test split of a records file.
    Split(SplitArgs),
    /// Cohen's kappa between two annotations of the same records.
    Kappa {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        /// Write the agreement report as JSON.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Token-level disagreements between two annotations, as TSV.
    Diff {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a CRF tagger.
    TrainCrf(TrainArgs),
    /// Tag a CoNLL file with a trained CRF.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Tag a CoNLL file with the lookup table.
    Lookup {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Table file; defaults to $DCNER_TABLE, then the built-in table.
        #[arg(long)]
        table: Option<PathBuf>,
    },
    /// Exact-span scoring of predictions against gold.
    Score {
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        report: PathBuf,
        /// Include per-record counts in the report.
        #[arg(long)]
        per_record: bool,
    },
    /// Surface forms found by the model but missing from the table.
    Enrich {
        #[arg(long)]
        model_pred: PathBuf,
        #[arg(long)]
        lookup_pred: PathBuf,
        #[arg(long)]
        table: Option<PathBuf>,
        #[arg(long)]
        candidates: PathBuf,
        #[arg(long)]
        patch: PathBuf,
        /// Full enrichment report as JSON.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Generate a synthetic corpus with gold annotations.
    Synth(SynthArgs),
    /// Consolidated CRF and lookup comparison on one gold file.
    Report {
        #[arg(long)]
        gold: Option<PathBuf>,
        #[arg(long)]
        crf: Option<PathBuf>,
        #[arg(long)]
        lookup: Option<PathBuf>,
        #[arg(long)]
        table: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Exact block sizes, e.g. 6108,816,1222.
    #[arg(long, value_parser = triple::<usize>, conflicts_with = "ratios")]
    pub counts: Option<[usize; 3]>,
    /// Block fractions summing to 1 [default: 0.75,0.10,0.15].
    #[arg(long, value_parser = triple::<f64>)]
    pub ratios: Option<[f64; 3]>,
    #[arg(long)]
    pub train: PathBuf,
    #[arg(long)]
    pub validation: PathBuf,
    #[arg(long)]
    pub test: PathBuf,
    /// Annotations to partition the same way as the records.
    #[arg(long, requires_all = ["gold_train", "gold_validation", "gold_test"])]
    pub gold: Option<PathBuf>,
    #[arg(long, requires = "gold")]
    pub gold_train: Option<PathBuf>,
    #[arg(long, requires = "gold")]
    pub gold_validation: Option<PathBuf>,
    #[arg(long, requires = "gold")]
    pub gold_test: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub train: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
    /// JSON training configuration; flags below override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub max_epochs: Option<usize>,
    #[arg(long)]
    pub l2: Option<f64>,
    #[arg(long)]
    pub step: Option<f64>,
    /// Per-epoch objective log as JSON lines.
    #[arg(long)]
    pub log: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// JSON settings; flags below override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub records: Option<usize>,
    #[arg(long)]
    pub misspell_rate: Option<f64>,
    #[arg(long)]
    pub holdout_terms: Option<f64>,
    #[arg(long)]
    pub table: Option<PathBuf>,
    #[arg(long)]
    pub out_records: PathBuf,
    #[arg(long)]
    pub out_gold: PathBuf,
}

fn triple<T>(s: &str) -> std::result::Result<[T; 3], String>
where
    T: std::str::FromStr + Copy,
    T::Err: std::fmt::Display,
{
    let parts = s
        .split(',')
        .map(|p| p.trim().parse::<T>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<std::result::Result<Vec<T>, String>>()?;
    <[T; 3]>::try_from(parts).map_err(|v| format!("expected 3 comma-separated values, got {}", v.len()))
}

fn version_text() -> &'static str {
    static TEXT: OnceLock<String> = OnceLock::new();
    TEXT.get_or_init(|| {
        format!(
            "{} (model format {MODEL_FORMAT_VERSION}, table format {TABLE_FORMAT_VERSION})",
            env!("CARGO_PKG_VERSION")
        )
    })
}

/// Parse `argv` (including the program name), run, and return the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let command = Cli::command().version(version_text());
    let matches = match command.try_get_matches_from(argv) {
        Ok(m) => m,
        Err(e) => {
            use clap::error::ErrorKind;
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return 1;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_io() {
                2
            } else {
                1
            }
        }
    }
}

fn resolve_table(path: Option<&Path>) -> Result<LookupTable> {
    if let Some(p) = path {
        return load_table(p);
    }
    match std::env::var_os(TABLE_ENV) {
        Some(p) if !p.is_empty() => load_table(PathBuf::from(p)),
        _ => Ok(LookupTable::builtin()),
    }
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::Model(e.to_string()))?;
    s.push('\n');
    write_atomic(path, s.as_bytes())
}

/// Run a parsed command.
pub fn execute(cli: &Cli) -> Result<()> {
    let say = |msg: String| {
        if !cli.quiet {
            println!("{msg}");
        }
    };
    match &cli.command {
        Command::Tokenize { input, out } => {
            let records = load_records(input)?;
            let seqs: Vec<TaggedSequence> = records
                .iter()
                .map(|r| TaggedSequence::untagged(r.id.clone(), tokenize(&r.cause_text)))
                .collect();
            conll::write(out, &seqs)?;
            say(format!("{} records tokenized", seqs.len()));
        }
        Command::Split(a) => {
            let spec = match (&a.counts, &a.ratios) {
                (Some(c), _) => SplitSpec::Counts(*c),
                (None, Some(r)) => SplitSpec::Ratios(*r),
                (None, None) => SplitSpec::Ratios([0.75, 0.10, 0.15]),
            };
            let records = load_records(&a.input)?;
            let split = chronological_split(&records, &spec)?;
            save_records(&a.train, &split.train)?;
            save_records(&a.validation, &split.validation)?;
            save_records(&a.test, &split.test)?;
            if let (Some(g), Some(gt), Some(gv), Some(gs)) = (&a.gold, &a.gold_train, &a.gold_validation, &a.gold_test) {
                let gold = conll::read(g)?;
                let by_id: HashMap<&str, &TaggedSequence> =
                    gold.iter().map(|s| (s.record_id.as_str(), s)).collect();
                for (records, path) in [(&split.train, gt), (&split.validation, gv), (&split.test, gs)] {
                    let block = records
                        .iter()
                        .map(|r| {
                            by_id.get(r.id.as_str()).map(|s| (*s).clone()).ok_or_else(|| {
                                Error::Split(format!("record {:?} has no annotation in {}", r.id, g.display()))
                            })
                        })
                        .collect::<Result<Vec<_>>>()?;
                    conll::write(path, &block)?;
                }
            }
            say(format!(
                "train {} validation {} test {}",
                split.train.len(),
                split.validation.len(),
                split.test.len()
            ));
        }
        Command::Kappa { a, b, report } => {
            let r = kappa(&conll::read(a)?, &conll::read(b)?)?;
            if let Some(p) = report {
                write_json(p, &r)?;
            }
            say(format!("kappa {:.6} over {} tokens", r.kappa, r.n_tokens));
        }
        Command::Diff { a, b, out } => {
            let rows = disagreements(&conll::read(a)?, &conll::read(b)?)?;
            write_atomic(out, disagreements_tsv(&rows).as_bytes())?;
            say(format!("{} disagreements", rows.len()));
        }
        Command::TrainCrf(a) => {
            let mut config = match &a.config {
                Some(p) => serde_json::from_str::<TrainConfig>(&read_to_string(p)?)
                    .map_err(|e| Error::Training(format!("{}: {e}", p.display())))?,
                None => TrainConfig::default(),
            };
            if let Some(v) = a.max_epochs {
                config.max_epochs = v;
            }
            if let Some(v) = a.l2 {
                config.l2 = v;
            }
            if let Some(v) = a.step {
                config.initial_step = v;
            }
            if let Some(v) = cli.seed {
                config.seed = v;
            }
            let corpus = conll::read(&a.train)?;
            let (model, log) = train_logged::<f64>(&corpus, &config)?;
            save_model(&model, &a.model)?;
            if let Some(p) = &a.log {
                let mut s = String::new();
                for e in &log {
                    s.push_str(&serde_json::to_string(e).map_err(|e| Error::Training(e.to_string()))?);
                    s.push('\n');
                }
                write_atomic(p, s.as_bytes())?;
            }
            let meta = &model.training_meta;
            say(format!(
                "trained {} epochs, objective {}, converged {}",
                meta.epochs, meta.final_objective, meta.converged
            ));
        }
        Command::Predict { model, input, out } => {
            let model: Crf64 = load_model(model)?;
            let pred = predict_corpus(&model, &conll::read(input)?);
            conll::write(out, &pred)?;
            say(format!("{} records tagged", pred.len()));
        }
        Command::Lookup { input, out, table } => {
            let table = resolve_table(table.as_deref())?;
            let pred = tag_corpus(&conll::read(input)?, &table)?;
            conll::write(out, &pred)?;
            let n: usize = pred
                .iter()
                .map(|s| s.tags.iter().filter(|t| matches!(t, Tag::Begin(_) | Tag::Unit(_))).count())
                .sum();
            say(format!("{} records tagged, {n} matches", pred.len()));
        }
        Command::Score {
            gold,
            pred,
            report,
            per_record,
        } => {
            let mut r = score(&conll::read(gold)?, &conll::read(pred)?)?;
            if !per_record {
                r.per_record = None;
            }
            write_json(report, &r)?;
            say(r.table_row("score"));
        }
        Command::Enrich {
            model_pred,
            lookup_pred,
            table,
            candidates,
            patch,
            report,
        } => {
            let table = resolve_table(table.as_deref())?;
            let r = enrich(&conll::read(model_pred)?, &conll::read(lookup_pred)?, &table)?;
            write_atomic(candidates, render_candidates(&r).as_bytes())?;
            write_atomic(patch, render_patch(&emit_table_patch(&r, None)).as_bytes())?;
            if let Some(p) = report {
                write_json(p, &r)?;
            }
            say(format!("{} candidate surface forms", r.unique_candidate_count));
        }
        Command::Synth(a) => {
            let mut settings = match &a.config {
                Some(p) => SynthSettings::from_json(&read_to_string(p)?)?,
                None => SynthSettings::default(),
            };
            if let Some(v) = cli.seed {
                settings.seed = v;
            }
            if let Some(v) = a.records {
                settings.n_records = v;
            }
            if let Some(v) = a.misspell_rate {
                settings.misspell_rate = v;
            }
            if let Some(v) = a.holdout_terms {
                settings.holdout_terms = v;
            }
            let corpus = generate(&settings.into_config(resolve_table(a.table.as_deref())?))?;
            save_records(&a.out_records, &corpus.records)?;
            conll::write(&a.out_gold, &corpus.gold)?;
            say(format!(
                "{} records, {} mentions",
                corpus.records.len(),
                corpus.mentions.len()
            ));
        }
        Command::Report {
            gold,
            crf,
            lookup,
            table,
            out,
        } => {
            let read = |p: &Option<PathBuf>| p.as_ref().map(conll::read).transpose();
            let (g, c, l) = (read(gold)?, read(crf)?, read(lookup)?);
            let table = resolve_table(table.as_deref())?;
            let r = pipeline_report(
                StageOutputs {
                    gold: g.as_deref(),
                    crf: c.as_deref(),
                    lookup: l.as_deref(),
                },
                &table,
            )?;
            write_atomic(out, r.to_json().as_bytes())?;
            say(r.table().trim_end().to_string());
        }
    }
    Ok(())
}
