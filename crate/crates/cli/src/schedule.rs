use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use clap::{ArgGroup, Args};
use serde::Serialize;

use mirror_tempering::io::{read_schedule_csv, write_csv};
use mirror_tempering::model::{fisher_info, GaussianPair};
use mirror_tempering::schedule::{gammas_to_lambdas, solve_schedule_ode, Schedule, StepSizes, DEFAULT_ODE_STEP};
use mirror_tempering::{Error, Result};

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("source").required(true).args(["lambdas", "gammas", "input", "ode"])))]
pub struct ScheduleArgs {
    /// Temperatures, comma separated, from 0 to 1.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    lambdas: Option<Vec<f64>>,
    /// Step sizes, comma separated, the last equal to 1.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    gammas: Option<Vec<f64>>,
    /// CSV file with a `lambda` column.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Solve the schedule ODE for an isotropic Gaussian target instead.
    #[arg(long, requires = "c")]
    ode: bool,
    #[arg(long, default_value_t = 1)]
    dim: usize,
    /// Target mean (ODE mode).
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    mean: f64,
    /// Target variance (ODE mode).
    #[arg(long, default_value_t = 1.0)]
    var: f64,
    /// Divergence scale of the ODE, `l' = c I(l)^(-1/2)`.
    #[arg(long)]
    c: Option<f64>,
    /// Euler step of the ODE.
    #[arg(long, default_value_t = DEFAULT_ODE_STEP)]
    step: f64,
    #[arg(long, default_value_t = 10_000_000)]
    max_steps: usize,
    /// Output file (default stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct Row {
    n: usize,
    lambda: f64,
    gamma: Option<f64>,
    rate: Option<f64>,
    bound: f64,
}

pub fn execute(args: ScheduleArgs) -> Result<()> {
    let schedule = if let Some(l) = &args.lambdas {
        Schedule::new(l.clone())?
    } else if let Some(g) = &args.gammas {
        gammas_to_lambdas(&StepSizes::new(g.clone())?)?
    } else if let Some(path) = &args.input {
        let file = File::open(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        read_schedule_csv(file)?
    } else {
        ode_schedule(&args)?
    };
    let rows = rows(&schedule)?;
    match &args.out {
        Some(path) => {
            let file =
                File::create(path).map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display())))?;
            write_csv(BufWriter::new(file), &rows)
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            write_csv(&mut stdout, &rows)?;
            stdout.flush()?;
            Ok(())
        }
    }
}

/// The Euler path read off at integer times, then 1.
fn ode_schedule(args: &ScheduleArgs) -> Result<Schedule> {
    let c = args.c.expect("clap requires --c with --ode");
    let pair = GaussianPair::isotropic(args.dim, args.mean, args.var)?;
    let path = solve_schedule_ode(
        |l| fisher_info(&pair, l).unwrap_or(f64::NAN),
        c,
        0.0,
        args.step,
        args.max_steps,
    )?;
    let end = *path.times.last().unwrap();
    let mut lambdas: Vec<f64> = (0..)
        .map(|n| n as f64)
        .take_while(|&t| t < end)
        .map(|t| path.lambda_at(t))
        .take_while(|&l| l < 1.0)
        .collect();
    lambdas.push(1.0);
    Schedule::new(lambdas)
}

fn rows(schedule: &Schedule) -> Result<Vec<Row>> {
    let lambdas = schedule.lambdas();
    let gammas = schedule.gammas();
    let rates = schedule.rate_cn()?;
    Ok(lambdas
        .iter()
        .enumerate()
        .map(|(n, &lambda)| Row {
            n,
            lambda,
            gamma: n.checked_sub(1).map(|k| gammas.gammas()[k]),
            rate: n.checked_sub(1).and_then(|k| rates.get(k).copied()),
            bound: 1.0 - lambda,
        })
        .collect())
}
