use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dirichlet_core::cli;
use dirichlet_core::Execution;

#[derive(Parser)]
#[command(name = "dirichlet", version, about = "Resolvents, semigroups and Dirichlet-functional checks from JSON configs")]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every suite of a config and write the JSON report.
    Run {
        config: PathBuf,
        /// Suites evaluated concurrently (and threads per suite).
        #[arg(long, default_value_t = default_workers())]
        workers: usize,
        /// Write per-sample violations of each suite as CSV into this directory.
        #[arg(long)]
        csv_dir: Option<PathBuf>,
    },
    /// List energy kinds, checks, sampler strategies and contractions.
    ListBuiltins,
    /// Write `t, T_t f, E_λ(T_t f)` rows for the config's `trace` section.
    FlowTrace {
        config: PathBuf,
        /// Time grid `start:stop:step`.
        #[arg(long = "t", default_value = "0:10:0.1")]
        grid: String,
        #[arg(long)]
        out: PathBuf,
    },
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

fn code(c: i32) -> ExitCode {
    ExitCode::from(c as u8)
}

fn main() -> ExitCode {
    let args = Args::parse();
    match args.command {
        Command::Run { config, workers, csv_dir } => code(cli::run(&config, workers, csv_dir.as_deref(), &mut std::io::stderr())),
        Command::ListBuiltins => {
            print!("{}", cli::list_builtins());
            code(cli::EXIT_PASS)
        }
        Command::FlowTrace { config, grid, out } => {
            let result = cli::load(&config).map_err(|e| e.to_string()).and_then(|loaded| {
                let times = cli::parse_grid(&grid).map_err(|e| format!("config error at `--t`: {e}"))?;
                let csv = cli::flow_trace(&loaded, &times, Execution::Parallel).map_err(|e| e.to_string())?;
                std::fs::write(&out, csv).map_err(|e| format!("cannot write {}: {e}", out.display()))
            });
            match result {
                Ok(()) => code(cli::EXIT_PASS),
                Err(e) => {
                    eprintln!("{e}");
                    code(cli::EXIT_CONFIG)
                }
            }
        }
    }
}
