use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use spinorlab_core::scenario::{convergence_study, run_scenario, RunArtifacts, ScenarioConfig};
use spinorlab_core::Error;

/// Batch runner for spinorlab scenarios.
#[derive(Parser)]
#[command(name = "spinorlab", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute every run listed in a scenario config.
    Run {
        config: PathBuf,
        /// Output directory; overrides `output_dir` in the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Leave wall-clock times out of the artifacts.
        #[arg(long)]
        deterministic: bool,
    },
    /// Refine the configured grid `levels` times and fit observed orders.
    Study {
        config: PathBuf,
        #[arg(long)]
        levels: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        deterministic: bool,
    },
}

const EXIT_RUN_FAILED: u8 = 1;
const EXIT_BAD_INPUT: u8 = 2;

fn load(path: &Path) -> Result<(ScenarioConfig, Vec<u8>), Error> {
    let raw = std::fs::read(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let text = std::str::from_utf8(&raw).map_err(|e| Error::ConfigError(format!("not UTF-8: {e}")))?;
    Ok((ScenarioConfig::from_json(text)?, raw))
}

fn out_dir(cli: Option<PathBuf>, cfg: &ScenarioConfig) -> PathBuf {
    cli.or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("spinorlab-out"))
}

/// Caps rayon's pool at `SPINORLAB_THREADS` when set.
fn configure_threads() -> Result<(), Error> {
    let Ok(v) = std::env::var("SPINORLAB_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::ConfigError(format!("SPINORLAB_THREADS = {v:?} is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::ConfigError(e.to_string()))
}

fn report(art: &RunArtifacts) -> ExitCode {
    for run in &art.manifest.runs {
        match &run.error {
            None => println!("{:<20} ok", run.run),
            Some(e) => println!("{:<20} FAILED: {e}", run.run),
        }
    }
    println!("artifacts in {}", art.out_dir.display());
    if art.all_ok() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_RUN_FAILED)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("spinorlab: {e}");
        return ExitCode::from(EXIT_BAD_INPUT);
    }
    let result = match cli.command {
        Command::Run { config, out, deterministic } => load(&config).and_then(|(cfg, raw)| {
            let dir = out_dir(out, &cfg);
            run_scenario(&cfg, &raw, &dir, deterministic)
        }),
        Command::Study { config, levels, out, deterministic } => load(&config).and_then(|(cfg, raw)| {
            let dir = out_dir(out, &cfg);
            convergence_study(&cfg, &raw, &dir, levels, deterministic)
        }),
    };
    match result {
        Ok(art) => report(&art),
        Err(e) => {
            eprintln!("spinorlab: {e}");
            ExitCode::from(EXIT_BAD_INPUT)
        }
    }
}
