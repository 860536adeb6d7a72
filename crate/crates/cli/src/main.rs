//! `pltune` command-line front end.
//!
//! Exit codes: 0 on success, 1 for data or I/O errors, 2 for usage errors.

mod commands;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "pltune",
    version,
    about = "Plackett-Luce tuning and reranking of N-best lists"
)]
struct Cli {
    /// Worker threads for parallel evaluation (default: all cores). Results
    /// do not depend on this value.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit weights on an N-best file against references.
    Train(TrainArgs),
    /// Reorder N-best lists by model score and print the top entries.
    Rerank(RerankArgs),
    /// Print corpus BLEU of one hypothesis per sentence.
    Evaluate(EvaluateArgs),
    /// Print feature count over mean list size and whether to resample.
    Richness(RichnessArgs),
    /// Run the iterative tuning loop against the synthetic decoder.
    TuneSim(TuneSimArgs),
    /// Write one round of synthetic N-best lists and their references.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub nbest: String,
    #[arg(long)]
    pub refs: String,
    /// Output weights file.
    #[arg(long)]
    pub out: String,
    /// Ground-truth ranking length.
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    /// Precision of the Gaussian prior on the weights.
    #[arg(long, default_value_t = 1.0)]
    pub l2: f64,
    #[arg(long = "max-iter", default_value_t = 500)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Resample every list to this many hypotheses (at least 3).
    #[arg(long = "sample-size")]
    pub sample_size: Option<usize>,
    /// Write the optimizer history as CSV.
    #[arg(long)]
    pub history: Option<String>,
}

#[derive(Debug, Args)]
pub struct RerankArgs {
    #[arg(long)]
    pub nbest: String,
    #[arg(long)]
    pub weights: String,
    #[arg(long, default_value_t = 1)]
    pub top: usize,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// One line per sentence, `id ||| tokens` or full N-best lines.
    #[arg(long)]
    pub hyp: String,
    #[arg(long)]
    pub refs: String,
}

#[derive(Debug, Args)]
pub struct RichnessArgs {
    #[arg(long)]
    pub nbest: String,
    #[arg(long, default_value_t = 5.0)]
    pub threshold: f64,
}

#[derive(Debug, Args)]
pub struct TuneSimArgs {
    /// Synthetic decoder spec (`key=value` lines).
    #[arg(long)]
    pub spec: String,
    #[arg(long)]
    pub refs: String,
    #[arg(long, default_value_t = 40)]
    pub rounds: usize,
    #[arg(long = "per-round", default_value_t = 200)]
    pub per_round: usize,
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    #[arg(long)]
    pub out: String,
    /// Per-round CSV.
    #[arg(long)]
    pub history: String,
    #[arg(long, default_value_t = 1.0)]
    pub l2: f64,
    #[arg(long = "max-iter", default_value_t = 500)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Hypotheses kept per list when the corpus is not rich enough.
    #[arg(long = "sample-size", default_value_t = 30)]
    pub sample_size: usize,
    /// Richness below which lists are resampled.
    #[arg(long, default_value_t = 5.0)]
    pub threshold: f64,
    /// Keep running all rounds even when a round adds nothing new.
    #[arg(long = "no-early-stop")]
    pub no_early_stop: bool,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub spec: String,
    /// Output N-best file.
    #[arg(long)]
    pub nbest: String,
    /// Output reference file.
    #[arg(long)]
    pub refs: String,
    /// Hypotheses per sentence (default: the whole pool).
    #[arg(long = "per-round")]
    pub per_round: Option<usize>,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Train(a) => commands::train(a),
        Command::Rerank(a) => commands::rerank(a),
        Command::Evaluate(a) => commands::evaluate(a),
        Command::Richness(a) => commands::richness(a),
        Command::TuneSim(a) => commands::tune_sim(a),
        Command::Synth(a) => commands::synth(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.threads {
        Some(0) => Err(CliError::Usage("--threads must be at least 1".into())),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| run(cli)),
            Err(e) => Err(CliError::Data(format!("cannot start worker threads: {e}"))),
        },
        None => run(cli),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("pltune: {e}");
            ExitCode::from(e.code())
        }
    }
}
