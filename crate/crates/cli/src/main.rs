//! `uws`: generate synthetic weak-supervision tasks, learn label models,
//! aggregate pseudolabels and run parameter sweeps.
//!
//! Exit codes: 0 success, 1 usage error, 2 invalid input, 3 runtime failure.

mod commands;
mod error;
mod files;
mod pipeline;
mod sweep;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use uws::inference::{NegativeWeights, Rule};
use uws::label_model::{LearnPath, TripletStrategy};

use crate::error::{CmdResult, Failure};
use crate::pipeline::InferSettings;

#[derive(Parser)]
#[command(name = "uws", version, about = "Weak supervision over structured label spaces")]
struct Cli {
    /// Worker threads (defaults to one per core).
    #[arg(long, global = true, env = "UWS_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset and its truth from a scenario file.
    Generate {
        #[arg(long)]
        scenario: PathBuf,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        /// Overrides the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Learn a label model from labeling-function outputs only.
    Learn(LearnCmd),
    /// Aggregate labeling-function outputs into pseudolabels.
    Infer(InferCmd),
    /// Run a parameter sweep and write long-format results.
    Sweep {
        /// Sweep configuration file.
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the base seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the replicate count.
        #[arg(long)]
        replicates: Option<usize>,
    },
    /// All-pairs shortest-hop distances of a graph.
    GraphMetric {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Classical MDS embedding of a finite metric, with its distortion.
    Mds {
        #[command(flatten)]
        space: MetricArgs,
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct MetricArgs {
    /// Edge list defining a shortest-hop metric.
    #[arg(long, conflicts_with = "metric")]
    graph: Option<PathBuf>,
    /// Distance matrix CSV.
    #[arg(long)]
    metric: Option<PathBuf>,
}

#[derive(Args)]
struct LearnCmd {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// hypercube, continuous or isotropic.
    #[arg(long, value_parser = parse_path)]
    path: Option<LearnPath>,
    /// Two-point prior probability of the first class.
    #[arg(long, conflicts_with = "second_moment")]
    class_prob: Option<f64>,
    /// E[g(Y)_i^2], one value or one per coordinate.
    #[arg(long, value_delimiter = ',')]
    second_moment: Option<Vec<f64>>,
    /// first or median.
    #[arg(long, default_value = "first", value_parser = parse_triplets)]
    triplets: TripletStrategy,
    /// Labeling function known to be better than random.
    #[arg(long)]
    anchor: Option<usize>,
    /// MDS dimension for node labels on the continuous path.
    #[arg(long)]
    dim: Option<usize>,
    /// Conditionally dependent pairs, as `a-b`.
    #[arg(long, value_delimiter = ',', value_parser = parse_pair)]
    correlated: Vec<(usize, usize)>,
    #[command(flatten)]
    space: MetricArgs,
}

#[derive(Args)]
struct InferCmd {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    model: Option<PathBuf>,
    /// Truth labels; enables the metrics sidecar.
    #[arg(long)]
    truth: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// mv or weighted.
    #[arg(long, default_value = "weighted", value_parser = parse_rule)]
    rule: Rule,
    /// Local-search restarts for rankings too long to enumerate.
    #[arg(long, default_value_t = 8)]
    restarts: usize,
    /// Local-search seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Replace negatively weighted labels by their opposite instead of dropping them.
    #[arg(long)]
    sign_flip: bool,
    #[command(flatten)]
    space: MetricArgs,
}

fn parse_path(s: &str) -> Result<LearnPath, String> {
    s.parse().map_err(|e: uws::Error| e.to_string())
}

fn parse_triplets(s: &str) -> Result<TripletStrategy, String> {
    s.parse().map_err(|e: uws::Error| e.to_string())
}

fn parse_rule(s: &str) -> Result<Rule, String> {
    s.parse().map_err(|e: uws::Error| e.to_string())
}

fn parse_pair(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once('-').ok_or_else(|| format!("expected 'a-b', got '{s}'"))?;
    let idx = |v: &str| v.trim().parse::<usize>().map_err(|_| format!("'{v}' is not an index"));
    Ok((idx(a)?, idx(b)?))
}

fn run(cli: Cli) -> CmdResult<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Runtime(format!("thread pool: {e}")))?;
    }
    match cli.command {
        Command::Generate { scenario, out, seed } => commands::generate(&scenario, &out, seed),
        Command::Learn(a) => commands::learn(&commands::LearnArgs {
            dataset: &a.dataset,
            out: &a.out,
            path: a.path,
            class_prob: a.class_prob,
            second_moment: a.second_moment.as_deref(),
            triplets: a.triplets,
            anchor: a.anchor,
            dim: a.dim,
            correlated: &a.correlated,
            graph: a.space.graph.as_deref(),
            metric: a.space.metric.as_deref(),
        }),
        Command::Infer(a) => commands::infer_cmd(&commands::InferArgs {
            dataset: &a.dataset,
            model: a.model.as_deref(),
            truth: a.truth.as_deref(),
            out: &a.out,
            settings: InferSettings {
                rule: a.rule,
                restarts: a.restarts,
                seed: a.seed,
                negative: if a.sign_flip { NegativeWeights::SignFlip } else { NegativeWeights::Clamp },
            },
            graph: a.space.graph.as_deref(),
            metric: a.space.metric.as_deref(),
        }),
        Command::Sweep { scenario, out, seed, replicates } => sweep::sweep(&scenario, &out, seed, replicates),
        Command::GraphMetric { graph, out } => commands::graph_metric(&graph, &out),
        Command::Mds { space, dim, out } => commands::mds(space.graph.as_deref(), space.metric.as_deref(), dim, &out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("uws: {f}");
            ExitCode::from(f.code() as u8)
        }
    }
}
