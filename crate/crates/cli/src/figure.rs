use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use clap::{Args, ValueEnum};
use serde::Serialize;

use mirror_tempering::experiments::{
    log_log_slope, narrow_figure, rates_figure, scaling_figure, sequences_figure, FigureOptions,
};
use mirror_tempering::io::write_csv;
use mirror_tempering::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Which {
    Rates,
    Sequences,
    Scaling,
    Narrow,
}

#[derive(Debug, Args)]
pub struct FigureArgs {
    which: Which,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Seed of the first replicate.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 5)]
    replicates: usize,
    /// Particle count, overriding the figure default.
    #[arg(long)]
    particles: Option<usize>,
    /// Dimensions of the scaling figure.
    #[arg(long, value_delimiter = ',', default_values_t = [4, 16, 64, 256])]
    dims: Vec<usize>,
    /// Step cap of the constant-rate sampler in the narrow figure.
    #[arg(long, default_value_t = 10_000)]
    ais_cap: usize,
}

/// Writes `<which>.csv` into the output directory.
pub fn execute(args: FigureArgs) -> Result<()> {
    if args.replicates == 0 {
        return Err(Error::Config("--replicates must be at least 1".into()));
    }
    let opts = FigureOptions {
        seed: args.seed,
        replicates: args.replicates,
        n_particles: args.particles,
        ..FigureOptions::default()
    };
    super::create_dir(&args.out)?;
    let (name, path) = match args.which {
        Which::Rates => ("rates", write(&args.out, "rates", &rates_figure()?)?),
        Which::Sequences => ("sequences", write(&args.out, "sequences", &sequences_figure(&opts)?)?),
        Which::Scaling => {
            let rows = scaling_figure(&args.dims, &opts)?;
            if args.dims.len() >= 2 {
                eprintln!("log-log slope {:.3}", log_log_slope(&rows)?);
            }
            ("scaling", write(&args.out, "scaling", &rows)?)
        }
        Which::Narrow => (
            "narrow",
            write(&args.out, "narrow", &narrow_figure(&opts, args.ais_cap)?)?,
        ),
    };
    log::info!("{name} figure written");
    println!("{}", path.display());
    Ok(())
}

fn write<T: Serialize>(dir: &std::path::Path, name: &str, rows: &[T]) -> Result<PathBuf> {
    let path = dir.join(format!("{name}.csv"));
    let file = File::create(&path).map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display())))?;
    write_csv(BufWriter::new(file), rows)?;
    Ok(path)
}
