use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use nelson_bench::{execute_with_threads, BenchError, Experiment, ExperimentConfig};

/// Run one experiment of the mean-field Nelson suite.
#[derive(Debug, Parser)]
#[command(name = "nelson-mf", version)]
struct Cli {
    /// skg-run, free-compare, semiclassical-scan, fock-verify,
    /// theorem2-scaling or convergence-study
    experiment: String,

    #[arg(long)]
    config: PathBuf,

    /// Output directory; overrides the config's `output_dir`.
    #[arg(long, env = "NELSON_MF_OUT")]
    out: Option<PathBuf>,

    /// Overrides the config's seed.
    #[arg(long)]
    seed: Option<u64>,

    /// Worker threads (default: all cores).
    #[arg(long, env = "NELSON_MF_THREADS")]
    threads: Option<usize>,

    /// Also write binary trajectories / Fock snapshots.
    #[arg(long)]
    binary: bool,
}

fn run(cli: Cli) -> Result<(), BenchError> {
    let experiment = Experiment::parse(&cli.experiment)
        .ok_or_else(|| BenchError::Config(format!("unknown experiment '{}'", cli.experiment)))?;
    let mut cfg = ExperimentConfig::load(&cli.config)?;
    if cfg.experiment != experiment {
        return Err(BenchError::Config(format!(
            "config is for '{}', not '{}'",
            cfg.experiment.name(),
            experiment.name()
        )));
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
        cfg.validate()?;
    }
    if let Some(out) = cli.out {
        cfg.output_dir = out;
    }
    let threads = cli.threads.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if threads == 0 {
        return Err(BenchError::Config("--threads must be at least 1".into()));
    }
    let manifest = execute_with_threads(&cfg, &cfg.output_dir, cli.binary, threads)?;
    for f in &manifest.files {
        println!("{}", cfg.output_dir.join(&f.name).display());
    }
    Ok(())
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
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("nelson-mf: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
