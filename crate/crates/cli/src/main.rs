use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cpcorr_cli::commands;
use cpcorr_cli::{CliError, RunConfig};

/// Thread count used when `--threads` is absent.
const THREADS_ENV: &str = "CPCORR_THREADS";

#[derive(Parser)]
#[command(name = "cpcorr", version, about = "Casimir-Polder energies above corrugated surfaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Directory for result files (overrides output.directory).
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    /// Worker threads; defaults to $CPCORR_THREADS, then all cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Extra `key=value` settings applied after the config file.
    #[arg(long = "override", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep the configured separations and write results.csv, eta.csv and a plot script.
    Run { config: PathBuf },
    /// Rerun a subset with each resolution knob doubled and report the changes.
    Converge { config: PathBuf },
}

fn threads(flag: Option<usize>) -> Result<Option<usize>, CliError> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => v.trim().parse::<usize>().map(Some).map_err(|_| CliError::Config {
            origin: THREADS_ENV.into(),
            message: format!("expected a positive integer, got '{v}'"),
        }),
        Err(_) => Ok(None),
    }
}

fn load(cli: &Cli, path: &Path) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::load(path, &cli.overrides)?;
    if let Some(d) = &cli.output_dir {
        cfg.output_dir = d.clone();
    }
    Ok(cfg)
}

fn main_inner(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = threads(cli.threads)? {
        if n == 0 {
            return Err(CliError::Config { origin: "--threads".into(), message: "must be >= 1".into() });
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config { origin: "--threads".into(), message: e.to_string() })?;
    }
    match &cli.command {
        Command::Run { config } => {
            let cfg = load(&cli, config)?;
            let out = commands::run(&cfg)?;
            for f in &out.files {
                eprintln!("wrote {}", f.display());
            }
            if !out.failures.is_empty() {
                return Err(CliError::Numerical(out.failures.join("; ")));
            }
        }
        Command::Converge { config } => {
            let cfg = load(&cli, config)?;
            let report = commands::converge(&cfg)?;
            print!("{}", report.render());
            let p = commands::write_report(&cfg.output_dir, &report)?;
            eprintln!("wrote {}", p.display());
            if !report.passed() {
                return Err(CliError::NotConverged(format!("tolerance {:e} exceeded", report.tolerance)));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match main_inner(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
