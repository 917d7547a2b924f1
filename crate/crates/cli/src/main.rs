//! Single binary exposing the full workflow: first-principles simulation,
//! phase matching, dataset generation, surrogate training/evaluation,
//! benchmarking, loss-weight ablation, prediction, and OAM spectra.

mod args;
mod commands;
mod context;

use clap::{Parser, Subcommand};
use context::{CliResult, Ctx};

#[derive(Parser, Debug)]
#[command(name = "oamnet", version, about = "SPDC modal-structure simulator and neural surrogate")]
struct Cli {
    /// Master RNG seed
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    /// Single-threaded deterministic mode
    #[arg(long, global = true)]
    strict: bool,
    /// Worker threads (defaults to OAMNET_THREADS or all cores)
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Directory for output files and run manifests
    #[arg(long, global = true, default_value = ".")]
    out_dir: std::path::PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate one configuration from first principles
    Simulate(commands::simulate::SimulateCmd),
    /// Solve the collinear phase-matching angle
    PhaseMatch(commands::phase_match::PhaseMatchCmd),
    /// Generate a labeled dataset with the simulator
    GenDataset(commands::gen_dataset::GenDatasetCmd),
    /// Train the surrogate on a dataset
    Train(commands::train::TrainCmd),
    /// Evaluate a checkpoint against simulator targets
    Eval(commands::eval::EvalCmd),
    /// Compare simulation and inference wall-times
    Bench(commands::bench::BenchCmd),
    /// Run the loss-weight ablation study
    Ablate(commands::ablate::AblateCmd),
    /// Predict one configuration with a trained checkpoint
    Predict(commands::predict::PredictCmd),
    /// Emit OAM spectra from the simulator and/or the model
    Spectrum(commands::spectrum::SpectrumCmd),
}

fn effective_jobs(cli: &Cli) -> usize {
    if cli.strict {
        return 1;
    }
    if let Some(j) = cli.jobs {
        return j.max(1);
    }
    if let Ok(env) = std::env::var("OAMNET_THREADS") {
        if let Ok(j) = env.parse::<usize>() {
            return j.max(1);
        }
    }
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
}

fn run(cli: &Cli) -> CliResult<()> {
    let jobs = effective_jobs(cli);
    #[cfg(feature = "parallel")]
    {
        // later commands in-process would race; the global pool is set once
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global();
    }
    let ctx = Ctx::new(cli.seed, cli.strict, jobs, cli.out_dir.clone())?;
    match &cli.command {
        Command::Simulate(cmd) => commands::simulate::run(&ctx, cmd),
        Command::PhaseMatch(cmd) => commands::phase_match::run(&ctx, cmd),
        Command::GenDataset(cmd) => commands::gen_dataset::run(&ctx, cmd),
        Command::Train(cmd) => commands::train::run(&ctx, cmd),
        Command::Eval(cmd) => commands::eval::run(&ctx, cmd),
        Command::Bench(cmd) => commands::bench::run(&ctx, cmd),
        Command::Ablate(cmd) => commands::ablate::run(&ctx, cmd),
        Command::Predict(cmd) => commands::predict::run(&ctx, cmd),
        Command::Spectrum(cmd) => commands::spectrum::run(&ctx, cmd),
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(err) = run(&cli) {
        eprintln!("error: {}", err.message());
        std::process::exit(err.code());
    }
}
