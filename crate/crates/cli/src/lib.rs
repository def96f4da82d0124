//! Experiment runner for `disperse-core`: config loading, subcommands,
//! deterministic CSV/JSON artifacts and the parameter sweep.

pub mod commands;
pub mod config;
pub mod output;
pub mod sweep;

use std::io;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::commands::{Context, Outcome, EXIT_ERROR};
use crate::config::{ConfigError, LoadedConfig};
use crate::output::{timestamp, write_json, RunRecord};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const DEFAULT_OUTPUT_DIR: &str = "disperse-out";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] disperse_core::Error),
    #[error("{0}: {1}")]
    Io(PathBuf, #[source] io::Error),
    #[error("T = {t} exceeds the wraparound horizon T_wrap = {horizon:.6}; shorten the run, widen the grid, or pass --allow-untrusted")]
    Untrusted { t: f64, horizon: f64 },
    #[error("{0}")]
    Usage(String),
}

#[derive(Debug, Parser)]
#[command(name = "disperse-lab", version, about = "Split-step experiments for the 1D defocusing NLS with a potential")]
pub struct Cli {
    /// TOML experiment config.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Overrides `output_dir` from the config.
    #[arg(long, global = true, value_name = "PATH")]
    pub output_dir: Option<PathBuf>,
    /// Overrides `seed` from the config.
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,
    /// Run past the wraparound horizon; results are flagged untrusted.
    #[arg(long, global = true)]
    pub allow_untrusted: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Check V >= 0, x V' <= 0 and the weighted L1 norms (exit 2 if not admissible).
    CheckPotential,
    /// Zero-energy Jost Wronskian (exit 3 if resonant).
    Resonance,
    /// Negative eigenvalues and quadratic-form bounds.
    Spectrum,
    /// Run the flow and write the conserved quantities and final state.
    Evolve,
    /// Fit L^a decay slopes of the flow.
    Decay,
    /// Pull the flow back by the linear flow and judge scattering.
    Scatter,
    /// Localized virial series, finite-difference checks and rigidity terms.
    Virial,
    /// Decay of translated profiles away from the potential.
    Profiles,
    /// Scatter runs over a parameter grid.
    Sweep,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::CheckPotential => "check_potential",
            Command::Resonance => "resonance",
            Command::Spectrum => "spectrum",
            Command::Evolve => "evolve",
            Command::Decay => "decay",
            Command::Scatter => "scatter",
            Command::Virial => "virial",
            Command::Profiles => "profiles",
            Command::Sweep => "sweep",
        }
    }
}

fn dispatch(command: Command, ctx: &Context) -> Result<Outcome, CliError> {
    match command {
        Command::CheckPotential => commands::check_potential(ctx),
        Command::Resonance => commands::resonance(ctx),
        Command::Spectrum => commands::spectrum(ctx),
        Command::Evolve => commands::evolve(ctx),
        Command::Decay => commands::decay(ctx),
        Command::Scatter => commands::scatter(ctx),
        Command::Virial => commands::virial(ctx),
        Command::Profiles => commands::profiles(ctx),
        Command::Sweep => sweep::sweep(ctx),
    }
}

/// Loads the config, applies flag overrides, runs the command and writes
/// `<command>.json` and `<command>.record.json`.
pub fn execute(cli: &Cli) -> Result<(i32, serde_json::Value), CliError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Usage("--config PATH is required".into()))?;
    let mut loaded = LoadedConfig::from_path(path)?;
    if let Some(seed) = cli.seed {
        loaded.config.seed = seed;
    }
    let output_dir = cli
        .output_dir
        .clone()
        .or_else(|| loaded.config.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR));
    loaded.config.output_dir = Some(output_dir.clone());
    std::fs::create_dir_all(&output_dir).map_err(|e| CliError::Io(output_dir.clone(), e))?;

    let ctx = Context {
        loaded: &loaded,
        output_dir: output_dir.clone(),
        allow_untrusted: cli.allow_untrusted,
    };
    let started = timestamp();
    let outcome = dispatch(cli.command, &ctx)?;
    let name = cli.command.name();
    let summary_path = output_dir.join(format!("{name}.json"));
    write_json(&summary_path, &outcome.summary).map_err(|e| CliError::Io(summary_path.clone(), e))?;
    let record = RunRecord {
        command: name.to_string(),
        config_hash: loaded.hash(),
        version: VERSION.to_string(),
        started,
        finished: timestamp(),
        exit_code: outcome.code,
        summary: outcome.summary.clone(),
        csv: outcome.csv,
    };
    let record_path = output_dir.join(format!("{name}.record.json"));
    write_json(&record_path, &serde_json::to_value(record).expect("record serializes"))
        .map_err(|e| CliError::Io(record_path.clone(), e))?;
    Ok((outcome.code, outcome.summary))
}

/// Entry point used by the binary; returns the process exit code.
pub fn run(cli: &Cli) -> i32 {
    match execute(cli) {
        Ok((code, summary)) => {
            println!("{}", serde_json::to_string_pretty(&summary).expect("json serializes"));
            code
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}
