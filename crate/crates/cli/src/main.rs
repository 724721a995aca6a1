//! `pathread`: runs one readout experiment and writes its tables.
//!
//! Exit codes: 0 success, 2 configuration or validation error, 3 numerical
//! failure, 4 I/O failure.

mod config;
mod experiments;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use pathread_core::Error as CoreError;

use config::{Experiment, FileConfig, Format, Overrides};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 4,
            CliError::Core(e) => match e {
                CoreError::InvalidParameter { .. }
                | CoreError::NonFinite(_)
                | CoreError::EmptyGrid
                | CoreError::NonMonotoneGrid(_)
                | CoreError::InvalidConfig(_)
                | CoreError::UnknownPreset(_)
                | CoreError::PresetFormat(_)
                | CoreError::NegativeTime(_) => 2,
                CoreError::Io(_) | CoreError::Csv(_) | CoreError::Json(_) => 4,
                _ => 3,
            },
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "pathread", version, about = "Dispersive readout with transmission/reflection interference")]
struct Cli {
    /// Experiment to run.
    #[arg(value_enum)]
    experiment: Experiment,
    /// TOML configuration file.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Device preset (Q1..Q5).
    #[arg(long)]
    device: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, short)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Worker threads for the Monte Carlo; results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
}

fn run(cli: Cli) -> Result<Vec<PathBuf>, CliError> {
    let file = match &cli.config {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?;
            FileConfig::parse(&text)?
        }
        None => FileConfig::default(),
    };
    let ov = Overrides {
        device: cli.device,
        seed: cli.seed,
        out: cli.out,
        format: cli.format,
    };
    let env_out = std::env::var_os(config::OUT_DIR_ENV).map(PathBuf::from);
    let resolved = config::resolve(cli.experiment, &file, &ov, env_out)?;
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config("`--threads` must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    let artifacts = experiments::run(&resolved)?;
    output::write_all(&resolved, &artifacts)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("pathread: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
