//! `majorant`: certify, study and solve from a TOML run configuration.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Result};
use clap::{Parser, Subcommand};
use majorant_core::harness::{certify, solve_to_file, study, RunConfig};

#[derive(Parser)]
#[command(name = "majorant", version, about = "Guaranteed error bounds for convection-diffusion approximations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Bound the error of one approximation and write a JSON report.
    Certify {
        #[arg(long)]
        config: PathBuf,
        /// Defaults to `output.report`, else stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Certify uniform refinements and write a CSV table.
    Study {
        #[arg(long)]
        config: PathBuf,
        /// Defaults to `study.levels`.
        #[arg(long)]
        levels: Option<usize>,
        /// Defaults to `output.table`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve and write the approximation as a field file.
    Solve {
        #[arg(long)]
        config: PathBuf,
        /// Defaults to `output.field`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load(path: &Path) -> Result<RunConfig> {
    RunConfig::from_path(path).map_err(|e| anyhow!("config stage: {e}"))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Certify { config, out } => {
            let cfg = load(&config)?;
            let report = certify(&cfg)?;
            match out.or_else(|| cfg.output.report.as_ref().map(|p| cfg.resolve(p))) {
                Some(path) => report.write(&path)?,
                None => println!("{}", report.to_json()),
            }
            let c = &report.certification;
            eprintln!(
                "{:?}: bound {:.6e}{}",
                c.bound.kind,
                c.bound.value,
                c.efficiency_index
                    .map(|i| format!(", efficiency index {i:.4}"))
                    .unwrap_or_default()
            );
        }
        Command::Study { config, levels, out } => {
            let cfg = load(&config)?;
            let path = out
                .or_else(|| cfg.output.table.as_ref().map(|p| cfg.resolve(p)))
                .ok_or_else(|| anyhow!("config stage: no output table (`--out` or `output.table`)"))?;
            let rows = study(&cfg, levels.unwrap_or(cfg.study.levels), &path)?;
            eprintln!("{} levels written to {}", rows.len(), path.display());
        }
        Command::Solve { config, out } => {
            let cfg = load(&config)?;
            let path = out
                .or_else(|| cfg.output.field.as_ref().map(|p| cfg.resolve(p)))
                .ok_or_else(|| anyhow!("config stage: no output field (`--out` or `output.field`)"))?;
            solve_to_file(&cfg, &path)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
