//! `idtsim`: run a sweep and write its CSV.
//!
//! Precedence is flag, then config file, then built-in default. Exit status
//! is 0 on success, 1 for usage or configuration errors and 2 for failures
//! while running or writing results.

use clap::Parser;
use idt_core::experiment::{
    emit_csv, load_config, run_experiment, ExperimentConfig, ExperimentKind, SnrSweep,
};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, Parser)]
#[command(
    name = "idtsim",
    version,
    about = "Monte-Carlo sweeps for interference-driver beamforming"
)]
struct Cli {
    /// TOML experiment file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// capacity_vs_nodes, per_vs_distance, per_vs_modulation, ber_vs_dimension or custom.
    #[arg(long)]
    experiment: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Trials per SNR point and swept value.
    #[arg(long)]
    trials: Option<u64>,
    /// Output CSV; defaults to `<experiment>.csv`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// SNR sweep in dB as start:stop:step.
    #[arg(long, allow_hyphen_values = true)]
    snr: Option<String>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    workers: Option<usize>,
}

fn resolve(cli: &Cli) -> Result<ExperimentConfig, String> {
    let kind = cli
        .experiment
        .as_deref()
        .map(str::parse::<ExperimentKind>)
        .transpose()
        .map_err(|e| e.to_string())?;
    let mut cfg = match (&cli.config, kind) {
        (Some(path), _) => load_config(path).map_err(|e| e.to_string())?,
        (None, Some(kind)) => ExperimentConfig::new(kind),
        (None, None) => return Err("either --config or --experiment is required".into()),
    };
    if let Some(kind) = kind {
        cfg.experiment = kind;
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(trials) = cli.trials {
        cfg.trials = trials;
    }
    if let Some(snr) = &cli.snr {
        cfg.snr = snr.parse::<SnrSweep>().map_err(|e| e.to_string())?;
    }
    if let Some(workers) = cli.workers {
        cfg.workers = Some(workers);
    }
    if let Some(out) = &cli.out {
        cfg.output = Some(out.clone());
    }
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let cfg = match resolve(&cli) {
        Ok(cfg) => cfg,
        Err(msg) => {
            eprintln!("idtsim: {msg}");
            return ExitCode::from(1);
        }
    };
    let out = cfg
        .output
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("{}.csv", cfg.experiment)));
    let result = run_experiment(&cfg).and_then(|series| emit_csv(&series, &out));
    match result {
        Ok(()) => {
            eprintln!("idtsim: wrote {}", out.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("idtsim: {e}");
            ExitCode::from(2)
        }
    }
}
