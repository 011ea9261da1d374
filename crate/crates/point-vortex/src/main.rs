//! Thin command-line wrapper: flags plus an optional TOML config select an
//! experiment, `point_vortex::cli::execute` does the work. Exit code 0 iff
//! every member finished and every validation passed.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use point_vortex::cli::{execute, RunConfig};

#[derive(Parser)]
#[command(
    name = "point-vortex",
    about = "Stochastic point-vortex experiments: single runs, ensembles, pathwise \
             comparisons, homogenised-coefficient extraction, and field grids",
    version
)]
struct Cli {
    /// Experiment: single, ensemble, pathwise-compare, homogenize, or
    /// fields-grid. Overrides the config file.
    experiment: Option<String>,

    /// TOML run configuration; defaults describe the benchmark triad.
    #[arg(long)]
    config: Option<PathBuf>,

    /// RNG seed override.
    #[arg(long)]
    seed: Option<u64>,

    /// Worker threads (default: one per core). Output bytes do not depend
    /// on this.
    #[arg(long)]
    workers: Option<usize>,

    /// Output directory override.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Methods override: comma-separated names or numbers, e.g. "2,6" or
    /// "stratonovich,fbm".
    #[arg(long, value_delimiter = ',')]
    method: Option<Vec<String>>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(workers) = cli.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global()
        {
            eprintln!("error: worker pool: {e}");
            return ExitCode::FAILURE;
        }
    }
    let mut config = match &cli.config {
        Some(path) => match RunConfig::load(path) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::FAILURE;
            }
        },
        None => RunConfig::default(),
    };
    config.apply_overrides(cli.experiment, cli.seed, cli.out, cli.method);

    match execute(&config) {
        Ok(summary) => {
            for file in &summary.files {
                println!("wrote {}", config.out.join(file).display());
            }
            if summary.ok {
                ExitCode::SUCCESS
            } else {
                for failure in &summary.failures {
                    eprintln!("failed: {failure}");
                }
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
