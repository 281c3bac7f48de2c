//! `wordrep`: train word representations and evaluate them as tagger
//! features.

mod commands;
mod config;
mod data;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{ArgAction, Parser, Subcommand};
use serde::Serialize;
use wordrep::ErrorKind;

use commands::{experiment, pairs, preprocess, repr, tagger};
use config::{default_snapshot_path, write_snapshot, CommandConfig, Resolver, RunConfig, UsageError};

const EXIT_FAILURE: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_PARSE: u8 = 3;
const EXIT_PROTOCOL: u8 = 4;
const EXIT_NUMERICAL: u8 = 5;

#[derive(Debug, Parser)]
#[command(name = "wordrep", version, about = "Word representations as sequence-labelling features")]
struct Cli {
    /// TOML file with a table per command and an optional [run] table.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads for parallel sections.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Run every parallel section on one thread.
    #[arg(long, global = true)]
    deterministic: bool,
    /// Where to write the resolved configuration; next to the main output
    /// by default.
    #[arg(long, global = true)]
    snapshot: Option<PathBuf>,
    /// More log output; repeat for debug.
    #[arg(short, long, global = true, action = ArgAction::Count)]
    verbose: u8,
    /// Errors only.
    #[arg(short, long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Normalize a corpus and write its vocabulary.
    Preprocess(preprocess::PreprocessArgs),
    /// Train embeddings or Brown clusters on a corpus.
    TrainRepr(repr::TrainReprArgs),
    /// Brown clustering with a cluster-file output.
    Cluster(repr::ClusterArgs),
    /// Train a CRF tagger and save a checkpoint.
    TrainTagger(tagger::TrainTaggerArgs),
    /// Score a checkpoint on test sets.
    Evaluate(tagger::EvaluateArgs),
    /// Accuracy against training-set size.
    LearningCurve(experiment::CurveArgs),
    /// Hyperparameter search scored on a dev set.
    Search(experiment::SearchArgs),
    /// Word vectors before and after updating.
    ExportPairs(pairs::PairsArgs),
}

fn execute<C: CommandConfig, A: Serialize>(
    resolver: &Resolver,
    run: &RunConfig,
    snapshot: Option<PathBuf>,
    args: &A,
    body: fn(&C) -> Result<()>,
) -> Result<()> {
    let cfg: C = resolver.resolve(args)?;
    body(&cfg)?;
    let path = snapshot.or_else(|| cfg.primary_output().map(default_snapshot_path));
    if let Some(path) = path {
        write_snapshot(&path, run, &cfg)?;
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    let resolver = Resolver::load(cli.config.as_deref())?;
    let run = resolver.run(cli.threads, cli.deterministic)?;
    let threads = if run.deterministic { Some(1) } else { run.threads };
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let snap = cli.snapshot;
    match &cli.command {
        Command::Preprocess(a) => execute(&resolver, &run, snap, a, preprocess::run),
        Command::TrainRepr(a) => execute(&resolver, &run, snap, a, repr::run_train_repr),
        Command::Cluster(a) => execute(&resolver, &run, snap, a, repr::run_cluster),
        Command::TrainTagger(a) => execute(&resolver, &run, snap, a, tagger::run_train),
        Command::Evaluate(a) => execute(&resolver, &run, snap, a, tagger::run_evaluate),
        Command::LearningCurve(a) => execute(&resolver, &run, snap, a, experiment::run_curve),
        Command::Search(a) => execute(&resolver, &run, snap, a, experiment::run_search),
        Command::ExportPairs(a) => execute(&resolver, &run, snap, a, pairs::run),
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<UsageError>() {
            return EXIT_USAGE;
        }
        if cause.is::<toml::de::Error>() {
            return EXIT_PARSE;
        }
        if let Some(e) = cause.downcast_ref::<wordrep::Error>() {
            return match e.kind() {
                ErrorKind::Parse => EXIT_PARSE,
                ErrorKind::Protocol => EXIT_PROTOCOL,
                ErrorKind::Numerical => EXIT_NUMERICAL,
                ErrorKind::Input | ErrorKind::Io => EXIT_FAILURE,
            };
        }
    }
    EXIT_FAILURE
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match (cli.quiet, cli.verbose) {
        (true, _) => "error",
        (false, 0) => "warn",
        (false, 1) => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
