mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

/// Probabilistic-method solvers for maximum clique and local partitioning.
#[derive(Debug, Parser)]
#[command(name = "probmethod", version)]
struct Cli {
    /// Worker threads; 1 runs everything on one thread with identical results.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a random instance or a whole corpus.
    Generate(GenerateArgs),
    /// Solve one instance and print a JSON report.
    Solve(SolveArgs),
    /// Train the message-passing network on a corpus.
    Train(TrainArgs),
    /// Run solvers over a corpus and print CSV.
    Benchmark(BenchmarkArgs),
    /// Re-check a solve report against its graph.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemArg {
    Clique,
    Partition,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProducerArg {
    Direct,
    Mpnn,
    #[value(alias = "uniform_random")]
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DecodeArg {
    Conditional,
    Sweep,
    Sampled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphKind {
    Gnp,
    Planted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LossArg {
    Clique,
    Cut,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitArg {
    All,
    Train,
    Val,
    Test,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, value_enum, default_value = "gnp")]
    kind: GraphKind,
    #[arg(long, default_value_t = 50)]
    n: usize,
    /// Edge probability (background probability for planted instances).
    #[arg(long, default_value_t = 0.5)]
    p: f64,
    /// Planted clique size.
    #[arg(long, default_value_t = 10)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write a corpus of this many graphs into `--out-dir`.
    #[arg(long)]
    count: Option<usize>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Train/validation/test fractions for a corpus.
    #[arg(long, default_value = "0.6,0.2,0.2")]
    split: String,
    /// Output file for a single graph (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Options shared by `solve` and `benchmark`. Every option can also be set in
/// the `--config` file under the same name.
#[derive(Debug, Args, Default)]
pub struct RunArgs {
    /// key = value file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    problem: Option<ProblemArg>,
    #[arg(long, value_enum)]
    producer: Option<ProducerArg>,
    #[arg(long, value_enum)]
    decode: Option<DecodeArg>,
    /// Penalty for the search loss.
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    /// Certificate confidence.
    #[arg(long)]
    t: Option<f64>,
    #[arg(long)]
    restarts: Option<usize>,
    /// Wall-clock budget in seconds (restarts then caps the count).
    #[arg(long)]
    time_limit: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    spread: Option<f64>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    seed_node: Option<usize>,
    #[arg(long)]
    v_l: Option<f64>,
    #[arg(long)]
    v_h: Option<f64>,
    #[arg(long)]
    intervals: Option<usize>,
    #[arg(long)]
    hops: Option<usize>,
    #[arg(long)]
    half_width: Option<f64>,
    /// Checkpoint for the mpnn producer.
    #[arg(long)]
    model: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long)]
    graph: PathBuf,
    #[command(flatten)]
    run: RunArgs,
    /// Exit with 2 when the constraint fails, or when the certificate is
    /// vacuous and the result does not verify.
    #[arg(long)]
    strict: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    loss: Option<LossArg>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    layers: Option<usize>,
    #[arg(long)]
    hidden: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Continue from this checkpoint's final parameters and optimizer state.
    #[arg(long)]
    resume: Option<PathBuf>,
    /// Checkpoint path; a `.bin` extension selects the binary format.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[command(flatten)]
    run: RunArgs,
    #[arg(long, value_enum, default_value = "all")]
    split: SplitArg,
    /// Run the direct and uniform producers (and mpnn with `--model`).
    #[arg(long)]
    compare: bool,
    /// Largest graph the exact clique oracle is run on.
    #[arg(long, default_value_t = 80)]
    oracle_limit: usize,
    /// Skip the oracle and leave ratios empty.
    #[arg(long)]
    no_oracle: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    graph: PathBuf,
    /// Report written by `solve`.
    #[arg(long)]
    result: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if let Err(e) = commands::set_threads(t) {
            eprintln!("error: {e:#}");
            return ExitCode::from(1);
        }
    }
    let outcome = match cli.command {
        Command::Generate(a) => commands::generate(&a),
        Command::Solve(a) => commands::solve(&a),
        Command::Train(a) => commands::train(&a),
        Command::Benchmark(a) => commands::benchmark(&a),
        Command::Verify(a) => commands::verify(&a),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
