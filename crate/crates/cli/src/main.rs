//! `qaret`: index, train, query and evaluate from the command line.
//!
//! Exit codes: 0 success, 1 usage, 2 data error, 3 internal error.

mod commands;
mod config;
mod error;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use qaret::pipeline::Method;

use crate::commands::{Context, External};
use crate::config::{AppConfig, Layout, Split};
use crate::error::{CliError, CliResult};

const DEFAULT_CONFIG: &str = "qaret.toml";

#[derive(Debug, Parser)]
#[command(name = "qaret", version, about = "Two-stage QA passage retrieval")]
struct Cli {
    /// TOML config file. Defaults to ./qaret.toml when present.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides `seed` from the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// bm25, tfidf-cos, lm, dense or two-stage. Overrides retrieval.method.
    #[arg(long, global = true)]
    method: Option<Method>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Extract stop-words, condense passages and build the sparse index.
    Index,
    /// Train the encoder and write the dense and two-stage stores.
    Train,
    /// Rank passages for one question; prints JSON lines.
    Query {
        question: String,
        /// Overrides retrieval.top_k.
        #[arg(long)]
        top_k: Option<usize>,
    },
    /// Score a split and write JSON, text and overlap CSV reports.
    Eval {
        /// Overrides eval.split.
        #[arg(long, value_enum)]
        split: Option<Split>,
        /// Passage vectors from an external encoder (embedding store file).
        #[arg(long, requires = "external_queries")]
        external_passages: Option<PathBuf>,
        /// Question vectors from the same encoder, keyed by pair id.
        #[arg(long, requires = "external_passages")]
        external_queries: Option<PathBuf>,
    },
    /// P@1 by lexical overlap between question and gold passage.
    AnalyzeOverlap {
        #[arg(long, value_enum)]
        split: Option<Split>,
    },
}

fn load_context(cli: &Cli) -> CliResult<Context> {
    let (mut config, base) = match &cli.config {
        Some(path) => (
            AppConfig::load(path)?,
            path.parent().unwrap_or(Path::new("")).to_path_buf(),
        ),
        None if Path::new(DEFAULT_CONFIG).exists() => {
            (AppConfig::load(Path::new(DEFAULT_CONFIG))?, PathBuf::new())
        }
        None => (AppConfig::default(), PathBuf::new()),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(method) = cli.method {
        config.retrieval.method = method;
    }
    let layout = Layout::new(&config.paths, &base);
    Ok(Context { config, layout })
}

fn run(cli: Cli) -> CliResult<()> {
    let ctx = load_context(&cli)?;
    match cli.command {
        Command::Index => commands::index(&ctx),
        Command::Train => commands::train(&ctx),
        Command::Query { question, top_k } => {
            let top_k = top_k.unwrap_or(ctx.config.retrieval.top_k);
            if top_k == 0 {
                return Err(CliError::Usage("--top-k must be >= 1".into()));
            }
            commands::query(&ctx, &question, top_k)
        }
        Command::Eval {
            split,
            external_passages,
            external_queries,
        } => {
            let external = match (external_passages, external_queries) {
                (Some(passages), Some(queries)) => Some(External { passages, queries }),
                _ => None,
            };
            commands::eval(
                &ctx,
                split.unwrap_or(ctx.config.eval.split),
                external.as_ref(),
            )
        }
        Command::AnalyzeOverlap { split } => {
            commands::analyze_overlap(&ctx, split.unwrap_or(ctx.config.eval.split))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qaret: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
