//! Command-line surface. Exit codes: 0 success, 1 when a problem ended in
//! an error, 2 for bad usage, configuration or toolchain problems.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};

use crate::bench::{
    emit_report, load_dataset, load_graph, mock_services, run_bench, BenchOptions, DatasetFormat, ServiceConfig,
};
use crate::graph::io::{write_embeddings, EMBEDDINGS_FILE};
use crate::graph::GraphStore;
use crate::ingest::{build_corpus_from_path, write_corpus};
use crate::model::Problem;
use crate::pipeline::{best_of_n, prove, tree_search, ErrorSource, Method, OutcomeStatus, RunConfig, Services};
use crate::retrieval::{embed_nodes, Embedder, RetrievalQuery, Retriever};

pub const EXIT_OK: i32 = 0;
pub const EXIT_PROBLEM_ERROR: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "proofgraph", version, about = "Knowledge-graph retrieval for LLM theorem proving")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse a MediaWiki XML dump (optionally gzipped) into a graph directory.
    Ingest {
        #[arg(long)]
        xml: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Embed every node of a graph directory and write embeddings.bin.
    Embed {
        #[arg(long)]
        graph: PathBuf,
        /// Service config JSON; its `embedding` section is used.
        #[arg(long)]
        provider: PathBuf,
    },
    /// Retrieve context for a text and print node titles with scores.
    Query {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        text: String,
        #[arg(long, default_value_t = 5)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        d: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        backends: BackendArgs,
    },
    /// Run the attempt loop on one problem.
    Prove {
        #[arg(long)]
        graph: Option<PathBuf>,
        #[command(flatten)]
        problem: ProblemArgs,
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        backends: BackendArgs,
    },
    /// Run a dataset and write report.json, summary.md and failures.md.
    Bench {
        #[arg(long)]
        graph: Option<PathBuf>,
        #[arg(long)]
        dataset: PathBuf,
        /// minif2f, proofnet, mustard or jsonl.
        #[arg(long)]
        format: Option<String>,
        #[arg(long, default_value = "bench_out")]
        out: PathBuf,
        #[arg(long)]
        workers: Option<usize>,
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        backends: BackendArgs,
    },
    /// Beam search over judged candidates for one problem.
    TreeSearch {
        #[arg(long)]
        graph: Option<PathBuf>,
        #[arg(long, default_value_t = 3)]
        beam: usize,
        #[arg(long, default_value_t = 2)]
        depth: usize,
        #[command(flatten)]
        problem: ProblemArgs,
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        backends: BackendArgs,
    },
    /// Sample N judged candidates for one problem.
    BestOfN {
        #[arg(long)]
        graph: Option<PathBuf>,
        #[arg(long, default_value_t = 5)]
        n: usize,
        #[command(flatten)]
        problem: ProblemArgs,
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        backends: BackendArgs,
    },
}

#[derive(Debug, Args)]
struct ProblemArgs {
    /// JSON or JSONL file with the problem.
    #[arg(long)]
    problem: PathBuf,
    /// Selects a problem by name when the file holds several.
    #[arg(long)]
    name: Option<String>,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long, default_value = "graph")]
    method: String,
    /// Attempts per problem.
    #[arg(long, default_value_t = 3)]
    r: u32,
    /// Maximum graph depth.
    #[arg(long, default_value_t = 2)]
    d: usize,
    #[arg(long, default_value_t = 5)]
    k: usize,
    /// Enables shuffled seed selection.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 60)]
    timeout_secs: u64,
}

impl RunArgs {
    fn config(&self) -> Result<RunConfig, String> {
        let config = RunConfig {
            method: self.method.parse::<Method>().map_err(|e| e.to_string())?,
            attempts: self.r,
            max_depth: self.d,
            top_k: self.k,
            seed: self.seed,
            verify_timeout_secs: self.timeout_secs,
            ..RunConfig::default()
        };
        config.validate().map_err(|e| e.to_string())?;
        Ok(config)
    }
}

#[derive(Debug, Args)]
struct BackendArgs {
    /// Service config JSON for live backends.
    #[arg(long, conflicts_with = "mock_dir")]
    config: Option<PathBuf>,
    /// Directory with chat.jsonl, verifier.jsonl and optionally embeddings.jsonl.
    #[arg(long)]
    mock_dir: Option<PathBuf>,
}

impl BackendArgs {
    fn service_config(&self) -> Result<ServiceConfig, String> {
        match &self.config {
            Some(p) => ServiceConfig::load(p).map_err(|e| e.to_string()),
            None => Ok(ServiceConfig::default()),
        }
    }

    fn services(&self, store: Option<Arc<GraphStore>>) -> Result<Services, String> {
        match &self.mock_dir {
            Some(dir) => mock_services(dir, store),
            None => self.service_config()?.services(store),
        }
        .map_err(|e| e.to_string())
    }

    fn mocked(&self) -> bool {
        self.mock_dir.is_some()
    }
}

/// Failure that maps straight to an exit code.
struct Exit(i32, String);

fn config_err(message: impl ToString) -> Exit {
    Exit(EXIT_CONFIG, message.to_string())
}

/// Sends tracing output to stderr, filtered by `RUST_LOG` (default `warn`).
pub fn init_logging() {
    let filter = tracing_subscriber::EnvFilter::try_from_default_env()
        .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("warn"));
    let _ = tracing_subscriber::fmt().with_env_filter(filter).with_writer(std::io::stderr).try_init();
}

/// Parses `argv` (program name first) and runs the command, writing results
/// to stdout.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_to(argv, &mut std::io::stdout().lock())
}

/// Like [`run`] but writes results to `out`.
pub fn run_to<I, T>(argv: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            if e.use_stderr() {
                eprint!("{}", e.render());
            } else {
                let _ = write!(out, "{}", e.render());
            }
            return code;
        }
    };
    match dispatch(cli.command, out) {
        Ok(code) => code,
        Err(Exit(code, message)) => {
            eprintln!("error: {message}");
            code
        }
    }
}

fn emit(out: &mut dyn Write, text: &str) -> Result<(), Exit> {
    out.write_all(text.as_bytes()).map_err(|e| Exit(EXIT_PROBLEM_ERROR, format!("writing output: {e}")))
}

fn optional_graph(graph: Option<&Path>, config: &RunConfig) -> Result<Option<Arc<GraphStore>>, Exit> {
    match graph {
        Some(dir) => load_graph(dir).map(Some).map_err(config_err),
        None if config.method == Method::Base => Ok(None),
        None => Err(config_err(format!("method {} needs --graph", config.method))),
    }
}

fn load_problem(args: &ProblemArgs) -> Result<Problem, Exit> {
    let problems = load_dataset(&args.problem, None).map_err(config_err)?;
    match &args.name {
        Some(name) => problems
            .into_iter()
            .find(|p| &p.name == name)
            .ok_or_else(|| config_err(format!("no problem named `{name}` in {}", args.problem.display()))),
        None => match problems.len() {
            1 => Ok(problems.into_iter().next().expect("one problem")),
            0 => Err(config_err(format!("{} holds no problems", args.problem.display()))),
            n => Err(config_err(format!("{} holds {n} problems; pick one with --name", args.problem.display()))),
        },
    }
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("value serializes") + "\n"
}

fn dispatch(command: Command, out: &mut dyn Write) -> Result<i32, Exit> {
    match command {
        Command::Ingest { xml, out: dir } => {
            let corpus = build_corpus_from_path(&xml).map_err(config_err)?;
            write_corpus(&corpus, &dir).map_err(|e| Exit(EXIT_PROBLEM_ERROR, e.to_string()))?;
            emit(out, &to_json(&corpus.stats))?;
            Ok(EXIT_OK)
        }
        Command::Embed { graph, provider } => {
            let config = ServiceConfig::load(&provider).map_err(config_err)?;
            let store = GraphStore::load_dir(&graph).map_err(config_err)?;
            let embedder = Embedder::new(config.embedding_provider());
            let vectors = embed_nodes(&store, &embedder).map_err(|e| Exit(EXIT_PROBLEM_ERROR, e.to_string()))?;
            let path = graph.join(EMBEDDINGS_FILE);
            write_embeddings(&path, vectors.iter().map(|(id, v)| (*id, v)))
                .map_err(|e| Exit(EXIT_PROBLEM_ERROR, e.to_string()))?;
            emit(out, &format!("embedded {} nodes into {}\n", vectors.len(), path.display()))?;
            Ok(EXIT_OK)
        }
        Command::Query {
            graph,
            text,
            k,
            d,
            seed,
            backends,
        } => {
            let store = load_graph(&graph).map_err(config_err)?;
            let services = backends.services(Some(store.clone())).map_err(config_err)?;
            let retriever: Arc<Retriever> = services.retriever.expect("graph given");
            let mut query = RetrievalQuery::new(text, k, d);
            query.seed = seed;
            let context = retriever.retrieve(&query).map_err(|e| Exit(EXIT_PROBLEM_ERROR, e.to_string()))?;
            let mut entries = context.entries.clone();
            entries.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.node_id.cmp(&b.node_id)));
            for e in entries {
                let title = store.node(e.node_id).map_or("?", |n| n.title.as_str());
                emit(out, &format!("{:.4}\t{}\t{}\t{}\n", e.score, e.hop, e.node_id, title))?;
            }
            Ok(EXIT_OK)
        }
        Command::Prove {
            graph,
            problem,
            run,
            backends,
        } => {
            let config = run.config().map_err(config_err)?;
            let store = optional_graph(graph.as_deref(), &config)?;
            let problem = load_problem(&problem)?;
            let services = backends.services(store).map_err(config_err)?;
            let outcome = prove(&problem, &config, &services);
            emit(out, &to_json(&outcome))?;
            Ok(match (outcome.status, outcome.error_source) {
                (OutcomeStatus::Error, Some(ErrorSource::Toolchain)) => EXIT_CONFIG,
                (OutcomeStatus::Error, _) => EXIT_PROBLEM_ERROR,
                _ => EXIT_OK,
            })
        }
        Command::Bench {
            graph,
            dataset,
            format,
            out: out_dir,
            workers,
            run,
            backends,
        } => {
            let config = run.config().map_err(config_err)?;
            let format = format.map(|f| f.parse::<DatasetFormat>()).transpose().map_err(config_err)?;
            let store = optional_graph(graph.as_deref(), &config)?;
            let problems = load_dataset(&dataset, format).map_err(config_err)?;
            let services = backends.services(store).map_err(config_err)?;
            let options = BenchOptions {
                workers: workers.unwrap_or_else(|| backends.service_config().map_or(4, |c| c.workers)),
                freeze_clock: backends.mocked(),
            };
            let report = run_bench(&problems, &config, &services, options);
            emit_report(&report, &out_dir).map_err(|e| Exit(EXIT_PROBLEM_ERROR, e.to_string()))?;
            emit(
                out,
                &format!(
                    "{}: {}/{} verified ({}), report in {}\n",
                    report.run_id,
                    report.verified_count(),
                    report.problem_count(),
                    crate::bench::percent(report.accuracy, report.problem_count()),
                    out_dir.display()
                ),
            )?;
            let toolchain = report.per_problem.iter().any(|o| o.error_source == Some(ErrorSource::Toolchain));
            Ok(if toolchain {
                EXIT_CONFIG
            } else if report.error_count() > 0 {
                EXIT_PROBLEM_ERROR
            } else {
                EXIT_OK
            })
        }
        Command::TreeSearch {
            graph,
            beam,
            depth,
            problem,
            run,
            backends,
        } => {
            let config = RunConfig {
                beam_width: beam,
                search_depth: depth,
                ..run.config().map_err(config_err)?
            };
            let store = optional_graph(graph.as_deref(), &config)?;
            let problem = load_problem(&problem)?;
            let services = backends.services(store).map_err(config_err)?;
            let result = tree_search(&problem, &config, &services).map_err(search_exit)?;
            emit(out, &to_json(&result))?;
            Ok(EXIT_OK)
        }
        Command::BestOfN {
            graph,
            n,
            problem,
            run,
            backends,
        } => {
            let config = RunConfig {
                n_candidates: n,
                ..run.config().map_err(config_err)?
            };
            let store = optional_graph(graph.as_deref(), &config)?;
            let problem = load_problem(&problem)?;
            let services = backends.services(store).map_err(config_err)?;
            let result = best_of_n(&problem, &config, &services).map_err(search_exit)?;
            emit(out, &to_json(&result))?;
            Ok(EXIT_OK)
        }
    }
}

fn search_exit(e: crate::pipeline::SearchError) -> Exit {
    match e {
        crate::pipeline::SearchError::Config(c) => config_err(c),
        crate::pipeline::SearchError::Toolchain(t) => config_err(format!("checker unavailable: {t}")),
        other => Exit(EXIT_PROBLEM_ERROR, other.to_string()),
    }
}
