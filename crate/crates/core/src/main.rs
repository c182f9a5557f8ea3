use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use mzcg_core::experiments::{self, Experiment, ExperimentConfig, Settings};
use mzcg_core::Error;

/// Coarse-grained Langevin dynamics experiments. Each run writes CSV data.
#[derive(Parser, Debug)]
#[command(name = "mzcg", version)]
struct Cli {
    /// landscape, kernel, kernel-matrix, mean-trajectory, ensemble or stationary
    experiment: String,
    /// Flat key=value config file
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a single key, e.g. --set beta=10 (repeatable)
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads. Output does not depend on this.
    #[arg(long)]
    threads: Option<usize>,
    /// Cheaper defaults (larger dt, shorter horizon, fewer samples)
    #[arg(long)]
    desk_scale: bool,
}

fn settings(cli: &Cli) -> Result<Settings, Error> {
    let mut s = match &cli.config {
        Some(path) => Settings::load(path)?,
        None => Settings::new(),
    };
    let mut overrides = Settings::new();
    for a in &cli.set {
        overrides.set_assignment(a)?;
    }
    if let Some(out) = &cli.out {
        overrides.set("out", out.to_string_lossy())?;
    }
    if let Some(seed) = cli.seed {
        overrides.set("seed", seed.to_string())?;
    }
    if let Some(n) = cli.threads {
        overrides.set("threads", n.to_string())?;
    }
    s.merge(&overrides);
    Ok(s)
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io { .. } => 1,
        Error::NumericalBlowup { .. } => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = cli
        .experiment
        .parse::<Experiment>()
        .and_then(|exp| Ok((exp, settings(&cli)?)))
        .and_then(|(exp, s)| ExperimentConfig::resolve(exp, cli.desk_scale, &s));
    let cfg = match result {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit_code(&e));
        }
    };
    if let Some(w) = cfg.params.scale_separation_warning() {
        eprintln!("warning: {w}");
    }
    match experiments::run(&cfg) {
        Ok(report) => {
            for p in &report.outputs {
                println!("wrote {}", p.display());
            }
            for (k, v) in &report.summary {
                println!("{k}={v}");
            }
            if let Some(b) = report.blowup {
                eprintln!(
                    "error: numerical blowup at step {} (t={}); partial output kept",
                    b.step, b.time
                );
                return ExitCode::from(3);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
