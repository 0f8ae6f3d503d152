//! `mtemper`: runs experiment files, regenerates figure data and converts
//! schedules.

mod figure;
mod run;
mod schedule;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mirror_tempering::Error;

#[derive(Debug, Parser)]
#[command(
    name = "mtemper",
    version,
    about = "Tempering schedules and samplers as entropic mirror descent"
)]
struct Cli {
    /// Worker threads (defaults to the number of cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run every replicate of an experiment file.
    Run(run::RunArgs),
    /// Write the data behind one figure as CSV.
    Figure(figure::FigureArgs),
    /// Convert temperatures and step sizes, with rates and bounds.
    Schedule(schedule::ScheduleArgs),
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
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
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numeric() { 2 } else { 1 })
        }
    }
}

fn execute(cli: Cli) -> mirror_tempering::Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("cannot start {n} threads: {e}")))?;
    }
    match cli.command {
        Command::Run(args) => run::execute(args),
        Command::Figure(args) => figure::execute(args),
        Command::Schedule(args) => schedule::execute(args),
    }
}

fn create_dir(dir: &PathBuf) -> mirror_tempering::Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Config(format!("cannot create {}: {e}", dir.display())))
}
