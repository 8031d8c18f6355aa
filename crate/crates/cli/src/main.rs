use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gradelast::io::run::load_config;
use gradelast::io::{run, Command, RunOptions};

#[derive(Parser)]
#[command(name = "gradelast", version, about = "Equilibria, branch tracking and stability of gradient-regularized elasticity")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Solve once from the initial guess or a checkpoint.
    Solve(Common),
    /// Follow a branch through the configured waypoints.
    Track(Common),
    /// Solve and report the smallest Hessian eigenvalues.
    Stability(Common),
    /// Refine by knot insertion and re-solve on each level.
    Refine(Common),
    /// Sample fields of a checkpoint or a fresh solve.
    Export(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = ".")]
    output: PathBuf,
    /// Overrides the random-guess and eigensolver seeds.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, env = "GRADELAST_THREADS")]
    threads: Option<usize>,
    /// Exit 0 after solver failures, still writing what was computed.
    #[arg(long)]
    continue_on_failure: bool,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let (command, common) = match cli.command {
        Sub::Solve(c) => (Command::Solve, c),
        Sub::Track(c) => (Command::Track, c),
        Sub::Stability(c) => (Command::Stability, c),
        Sub::Refine(c) => (Command::Refine, c),
        Sub::Export(c) => (Command::Export, c),
    };
    if let Some(n) = common.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot configure {n} threads: {e}");
            return ExitCode::from(2);
        }
    }
    let cfg = match load_config(&common.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let cfg = match common.seed {
        Some(s) => cfg.with_seed(s),
        None => cfg,
    };
    let opts = RunOptions { output: common.output, continue_on_failure: common.continue_on_failure };
    match run(command, &cfg, &opts) {
        Ok(summary) => {
            for f in &summary.files {
                log::info!("wrote {f}");
            }
            for f in &summary.failures {
                log::warn!("tolerated failure: {f}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
