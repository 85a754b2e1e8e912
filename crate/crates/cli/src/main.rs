use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use homodyne_lhv_cli::{run, CliError, RunConfig};

/// Runs one simulated homodyne experiment and writes CSV plus a run manifest.
#[derive(Debug, Parser)]
#[command(name = "homodyne-lhv", version)]
struct Args {
    /// Config file (`key = value` lines, or a run manifest).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Root seed; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV path; overrides the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; overrides the config. Results do not depend on it.
    #[arg(long)]
    workers: Option<usize>,
    /// bell-test, loophole-sweep, histogram, curve, scatter, singles or tomography.
    #[arg(long)]
    experiment: Option<String>,
    /// Extra `key=value` assignments applied after the config file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
}

fn load(args: &Args) -> Result<RunConfig, CliError> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
                path: path.clone(),
                source,
            })?;
            RunConfig::parse(&text)?
        }
        None => RunConfig::default(),
    };
    for s in &args.sets {
        let (k, v) = s
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("--set `{s}`: expected KEY=VALUE")))?;
        cfg.set(k, v)?;
    }
    if let Some(e) = &args.experiment {
        cfg.experiment = Some(e.parse()?);
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &args.out {
        cfg.out = Some(out.clone());
    }
    if let Some(w) = args.workers {
        cfg.workers = w;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprintln!("{}", CliError::Config(e.to_string().trim().to_string()).to_json());
            return ExitCode::from(2);
        }
    };
    match load(&args).and_then(|cfg| run(&cfg)) {
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
