use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use clap::Args;
use log::info;
use rayon::prelude::*;
use serde::Serialize;

use mirror_tempering::config::ExperimentSpec;
use mirror_tempering::io::{trace_rows, write_csv, write_lambdas_csv};
use mirror_tempering::smc::RunSummary;
use mirror_tempering::{Error, Result};

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Experiment file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Seed of the first replicate, overriding the file.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory, overriding the file (default `out`).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct RunRecord<'a> {
    name: &'a str,
    replicate: usize,
    seed: u64,
    #[serde(flatten)]
    summary: RunSummary,
}

/// Writes `<name>-<r>.json`, `<name>-<r>-trace.csv` and
/// `<name>-<r>-schedule.csv` per replicate `r`.
pub fn execute(args: RunArgs) -> Result<()> {
    let mut spec = ExperimentSpec::from_path(&args.config)?;
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    let out = args
        .out
        .or_else(|| spec.output.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    super::create_dir(&out)?;

    let results: Vec<_> = (0..spec.replicates)
        .into_par_iter()
        .map(|r| {
            let seed = spec.replicate_seed(r);
            (r, seed, spec.run_with_seed(seed))
        })
        .collect();

    for (r, seed, result) in results {
        let result = result?;
        info!("{} replicate {r}: {} steps", spec.name, result.n_steps);
        let stem = out.join(format!("{}-{r}", spec.name));
        let record = RunRecord {
            name: &spec.name,
            replicate: r,
            seed,
            summary: result.summary()?,
        };
        let mut json = serde_json::to_string_pretty(&record)?;
        json.push('\n');
        std::fs::write(stem.with_extension("json"), json)?;
        write_csv(
            create(&out, &format!("{}-{r}-trace.csv", spec.name))?,
            &trace_rows(&result),
        )?;
        write_lambdas_csv(
            create(&out, &format!("{}-{r}-schedule.csv", spec.name))?,
            &result.lambdas,
        )?;
        println!("{}", stem.with_extension("json").display());
    }
    Ok(())
}

fn create(dir: &std::path::Path, file: &str) -> Result<BufWriter<File>> {
    let path = dir.join(file);
    File::create(&path)
        .map(BufWriter::new)
        .map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display())))
}
