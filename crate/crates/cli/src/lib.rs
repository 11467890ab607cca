//! Command-line front end for the `qotto_core` Otto-engine simulator.
//!
//! Every subcommand produces one table written as CSV (default) or JSON to a
//! file or standard output. Output is a deterministic function of the
//! configuration and seed.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod table;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::config::{parse_config, ConfigError, HotOption, OutputFormat, RunConfig};
use crate::table::Table;

const SWEEP_HELP: &str = "\
Columns (one row per drive duration):
  tau_us                 drive duration of each stroke, µs
  hot_option             A, B or custom
  kt_cold_pev            cold-source temperature, peV
  kt_hot_pev             hot-source temperature, peV
  xi                     transition probability of the expansion
  xi_max                 largest xi that still extracts work (0 if none)
  mean_work_pev          mean extracted work per cycle, peV
  mean_heat_hot_pev      mean heat from the hot source, peV
  mean_heat_cold_pev     mean heat from the cold source, peV
  efficiency             mean_work / mean_heat_hot (empty if no heat)
  eta_otto               1 - nu1/nu2
  eta_carnot             1 - kt_cold/kt_hot
  lag                    efficiency lag, eta_carnot - efficiency
  entropy_production     entropy produced by both drives, nats
  power_pev_per_ms       mean_work / (2 tau + t_therm + t_cool)
  extraction_ok          true when mean_work > 0
  mc_samples             Monte Carlo sample count
  *_std                  Monte Carlo standard deviation of each quantity
                         (empty when mc_samples = 0)";

const DIST_HELP: &str = "\
Columns:
  series       'atom' for exact probability atoms, 'curve' for the
               Lorentzian-broadened density
  energy_pev   energy, peV
  value        probability (atom) or probability density per peV (curve)";

const QPT_HELP: &str = "\
Columns:
  map        expansion, compression or composite (expansion then compression)
  quantity   upsilon (matrix entry k,j), unitality_defect, delta_ideal
             (trace distance to the noiseless map, or to the identity for the
             composite) or imag_max (largest imaginary part of upsilon)
  k, j       matrix indices over the basis (i*1, sx, sy, sz)
  re, im     value (scalar rows use re only)";

#[derive(Debug, Parser)]
#[command(
    name = "qotto",
    version,
    about = "Finite-time quantum Otto engine simulator"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML run configuration; defaults are used for absent keys.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output file (standard output when absent).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<OutputFormat>,
    /// Drive duration in µs for single-duration commands.
    #[arg(long, global = true)]
    pub tau: Option<f64>,
    /// Hot-source preset: A (21.5 peV) or B (40.5 peV).
    #[arg(long, global = true)]
    pub hot: Option<HotOption>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long = "mc-samples", global = true)]
    pub mc_samples: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Figures of merit over the configured list of drive durations.
    #[command(after_help = SWEEP_HELP)]
    Sweep,
    /// Extracted-work distribution of the cycle.
    #[command(name = "work-dist", after_help = DIST_HELP)]
    WorkDist,
    /// Distribution of the heat absorbed from the hot source.
    #[command(name = "heat-dist", after_help = DIST_HELP)]
    HeatDist,
    /// Process matrices and channel diagnostics of the drives.
    #[command(after_help = QPT_HELP)]
    Qpt,
    /// Figures of merit at a single drive duration.
    #[command(after_help = SWEEP_HELP)]
    Cycle,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(#[from] ConfigError),
    #[error("invalid parameters: {0}")]
    Model(#[from] qotto_core::Error),
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    /// 1 for configuration and parameter errors, 2 for I/O errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Model(_) => 1,
            CliError::Read { .. } | CliError::Write { .. } => 2,
        }
    }
}

/// Loads the configuration file (if any) and applies command-line overrides.
pub fn resolve_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|source| CliError::Read {
                path: path.clone(),
                source,
            })?;
            parse_config(&text).map_err(|e| ConfigError {
                message: format!("{}: {}", path.display(), e.message),
                ..e
            })?
        }
        None => RunConfig::default(),
    };
    if let Some(out) = &cli.out {
        cfg.output.path = Some(out.clone());
    }
    if let Some(format) = cli.format {
        cfg.output.format = format;
    }
    if let Some(tau) = cli.tau {
        cfg.sweep.tau = tau;
    }
    if let Some(hot) = cli.hot {
        cfg.thermal.hot_option = hot;
        if hot != HotOption::Custom {
            cfg.thermal.kt_hot = None;
        }
    }
    if let Some(seed) = cli.seed {
        cfg.monte_carlo.seed = seed;
    }
    if let Some(n) = cli.mc_samples {
        cfg.monte_carlo.samples = n;
    }
    cfg.validate()
        .map_err(|(section, key, message)| ConfigError {
            line: None,
            message: format!("{section}.{key}: {message}"),
        })?;
    Ok(cfg)
}

pub fn build_table(command: Command, cfg: &RunConfig) -> Result<Table, CliError> {
    let table = match command {
        Command::Sweep => commands::sweep(cfg)?,
        Command::WorkDist => commands::work_dist(cfg)?,
        Command::HeatDist => commands::heat_dist(cfg)?,
        Command::Qpt => commands::qpt(cfg)?,
        Command::Cycle => commands::cycle(cfg)?,
    };
    Ok(table)
}

fn write_output(table: &Table, cfg: &RunConfig) -> Result<(), CliError> {
    let bytes = table.to_bytes(cfg.output.format);
    match &cfg.output.path {
        Some(path) => fs::write(path, &bytes).map_err(|source| CliError::Write {
            path: path.clone(),
            source,
        }),
        None => std::io::stdout()
            .lock()
            .write_all(&bytes)
            .map_err(|source| CliError::Write {
                path: Path::new("<stdout>").to_path_buf(),
                source,
            }),
    }
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = resolve_config(cli)?;
    log::info!("running {:?}", cli.command);
    let table = build_table(cli.command, &cfg)?;
    write_output(&table, &cfg)?;
    log::info!("wrote {} rows", table.rows.len());
    Ok(())
}
