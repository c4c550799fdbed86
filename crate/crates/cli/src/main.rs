//! `rlrtree`: generate data and workloads, train the learned insertion
//! policies, build indices and benchmark them.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use rlr_core::datagen::Distribution;
use rlr_core::PolicyName;

#[derive(Parser, Debug)]
#[command(name = "rlrtree", version, about = "Learned R-Tree toolkit")]
struct Cli {
    /// Worker threads for benchmarks; 0 uses every core.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic dataset.
    GenData(GenDataArgs),
    /// Generate range queries of one size.
    GenQueries(GenQueriesArgs),
    /// Generate a KNN workload.
    GenKnn(GenKnnArgs),
    /// Rescale a raw point file into a dataset.
    Ingest(IngestArgs),
    /// Train the ChooseSubtree agent, the Split agent, or both.
    Train(TrainArgs),
    /// Build an index and save a snapshot.
    Build(BuildArgs),
    /// Run query workloads over several indices.
    Bench(BenchArgs),
    /// Print model or index metadata.
    Inspect(InspectArgs),
}

#[derive(Args, Debug, Serialize)]
pub struct GenDataArgs {
    #[arg(long, value_parser = parse_distribution)]
    pub dist: Distribution,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u32).range(2..=10))]
    pub dims: u32,
    #[arg(long, env = "RLR_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Side length of every generated square.
    #[arg(long, default_value_t = 1e-4)]
    pub side: f64,
    #[arg(long, default_value_t = 9.0)]
    pub skew_c: f64,
    #[arg(long, default_value_t = 0.5)]
    pub mu: f64,
    #[arg(long, default_value_t = 0.2)]
    pub sigma: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct GenQueriesArgs {
    /// Query area as a fraction of the unit region (0.0001 = 0.01%).
    #[arg(long)]
    pub size: f64,
    #[arg(long, default_value_t = 1000)]
    pub count: usize,
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u32).range(2..=10))]
    pub dims: u32,
    #[arg(long, env = "RLR_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct GenKnnArgs {
    #[arg(long, default_value_t = 1000)]
    pub count: usize,
    /// K values; every point is written once per value.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub k: Vec<usize>,
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u32).range(2..=10))]
    pub dims: u32,
    #[arg(long, env = "RLR_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct IngestArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u32).range(2..=10))]
    pub dims: u32,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum AgentChoice {
    Cs,
    Split,
    Combined,
}

#[derive(Args, Debug, Serialize)]
pub struct TrainArgs {
    #[arg(long, value_enum)]
    pub agent: AgentChoice,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u32).range(2..=10))]
    pub dims: u32,
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    /// Objects per training round.
    #[arg(long, default_value_t = 50)]
    pub p: usize,
    #[arg(long, default_value_t = 20)]
    pub epochs_cs: usize,
    #[arg(long, default_value_t = 15)]
    pub epochs_split: usize,
    #[arg(long, default_value_t = 15)]
    pub parts: usize,
    #[arg(long, default_value_t = 0.95)]
    pub gamma_cs: f64,
    #[arg(long, default_value_t = 0.8)]
    pub gamma_split: f64,
    #[arg(long, default_value_t = 0.003)]
    pub lr_cs: f64,
    #[arg(long, default_value_t = 0.01)]
    pub lr_split: f64,
    #[arg(long, default_value_t = 64)]
    pub batch: usize,
    #[arg(long, default_value_t = 5000)]
    pub memory: usize,
    #[arg(long, default_value_t = 30)]
    pub sync_every: usize,
    /// Training query area as a fraction of the unit region.
    #[arg(long, default_value_t = 1e-4)]
    pub train_query_size: f64,
    #[arg(long, default_value_t = 50)]
    pub max_entries: usize,
    #[arg(long, default_value_t = 20)]
    pub min_entries: usize,
    #[arg(long, env = "RLR_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Model file for `--agent cs` or `--agent split`.
    #[arg(long)]
    pub out_model: Option<PathBuf>,
    /// ChooseSubtree model file for `--agent combined`.
    #[arg(long)]
    pub out_cs: Option<PathBuf>,
    /// Split model file for `--agent combined`.
    #[arg(long)]
    pub out_split: Option<PathBuf>,
    /// Training log; defaults to the first model path with `.log` appended.
    #[arg(long)]
    pub log: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct BuildArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u32).range(2..=10))]
    pub dims: u32,
    /// guttman-linear, guttman-quadratic, greene, rstar, ref or rlr.
    #[arg(long)]
    pub policy: String,
    #[arg(long)]
    pub model_cs: Option<PathBuf>,
    #[arg(long)]
    pub model_split: Option<PathBuf>,
    /// Reject models whose action-space size differs.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, default_value_t = 50)]
    pub max_entries: usize,
    #[arg(long, default_value_t = 20)]
    pub min_entries: usize,
    #[arg(long)]
    pub out_index: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct BenchArgs {
    /// `name=snapshot` pairs; the first is the default baseline.
    #[arg(long = "index", required = true)]
    pub indices: Vec<String>,
    #[arg(long)]
    pub baseline: Option<String>,
    /// Range query files, optionally labeled as `label=path`.
    #[arg(long = "queries")]
    pub queries: Vec<String>,
    /// KNN workload file.
    #[arg(long)]
    pub knn: Option<PathBuf>,
    /// Output prefix; writes `<prefix>.csv` and `<prefix>.json`.
    #[arg(long)]
    pub report: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct InspectArgs {
    #[arg(long, conflicts_with = "index", required_unless_present = "index")]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub index: Option<PathBuf>,
}

fn parse_distribution(s: &str) -> Result<Distribution, String> {
    s.parse()
}

pub fn parse_policy(s: &str) -> Result<Option<PolicyName>, String> {
    if s == "rlr" {
        Ok(None)
    } else {
        s.parse::<PolicyName>().map(Some).map_err(|e| e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(commands::EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
        {
            log::warn!("could not size the thread pool: {e}");
        }
    }
    let result = match &cli.command {
        Command::GenData(a) => commands::gen_data(a),
        Command::GenQueries(a) => commands::gen_queries(a),
        Command::GenKnn(a) => commands::gen_knn(a),
        Command::Ingest(a) => commands::ingest(a),
        Command::Train(a) => commands::train(a),
        Command::Build(a) => commands::build(a),
        Command::Bench(a) => commands::bench(a, cli.threads),
        Command::Inspect(a) => commands::inspect(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}
