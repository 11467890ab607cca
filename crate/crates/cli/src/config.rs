//! TOML run configuration.

use std::fmt;
use std::path::PathBuf;

use qotto_core::cycle::{CycleConfig, DEFAULT_REL_NOISE, DEFAULT_T_THERM_US};
use qotto_core::propagator::DEFAULT_STEPS;
use qotto_core::spin::{
    DriveProtocol, Phase, ThermalParams, DEFAULT_KT_COLD_PEV, DEFAULT_NU1_KHZ, DEFAULT_NU2_KHZ,
    KT_HOT_OPTION_A_PEV, KT_HOT_OPTION_B_PEV,
};
use serde::{Deserialize, Serialize};

/// Drive durations of the reference sweep, µs.
pub const REFERENCE_TAUS: [f64; 10] = [
    100.0, 200.0, 235.0, 260.0, 300.0, 320.0, 420.0, 500.0, 600.0, 700.0,
];

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    /// 1-based line of the offending entry, when known.
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "line {line}: {}", self.message),
            None => write!(f, "{}", self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum HotOption {
    A,
    #[default]
    B,
    #[serde(rename = "custom")]
    Custom,
}

impl std::str::FromStr for HotOption {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "A" | "a" => Ok(HotOption::A),
            "B" | "b" => Ok(HotOption::B),
            "custom" => Ok(HotOption::Custom),
            other => Err(format!(
                "unknown hot option {other:?} (expected A, B or custom)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProtocolSection {
    /// Initial gap frequency, kHz.
    pub nu1: f64,
    /// Final gap frequency, kHz.
    pub nu2: f64,
    pub n_steps: usize,
}

impl Default for ProtocolSection {
    fn default() -> Self {
        ProtocolSection {
            nu1: DEFAULT_NU1_KHZ,
            nu2: DEFAULT_NU2_KHZ,
            n_steps: DEFAULT_STEPS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThermalSection {
    /// peV.
    pub kt_cold: f64,
    pub hot_option: HotOption,
    /// peV; required when `hot_option = "custom"`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kt_hot: Option<f64>,
}

impl Default for ThermalSection {
    fn default() -> Self {
        ThermalSection {
            kt_cold: DEFAULT_KT_COLD_PEV,
            hot_option: HotOption::B,
            kt_hot: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CycleSection {
    /// µs.
    pub t_therm: f64,
    /// µs.
    pub t_cool: f64,
}

impl Default for CycleSection {
    fn default() -> Self {
        CycleSection {
            t_therm: DEFAULT_T_THERM_US,
            t_cool: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    /// µs.
    pub tau_list: Vec<f64>,
    /// Drive duration for the single-τ commands, µs.
    pub tau: f64,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            tau_list: REFERENCE_TAUS.to_vec(),
            tau: 100.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub format: OutputFormat,
    /// Standard output when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    /// Line width of the broadened curves, peV.
    pub lorentzian_fwhm: f64,
    pub curve_min: f64,
    pub curve_max: f64,
    /// Zero disables the broadened curve.
    pub curve_points: usize,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            format: OutputFormat::Csv,
            path: None,
            lorentzian_fwhm: 1.2,
            curve_min: -30.0,
            curve_max: 30.0,
            curve_points: 601,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MonteCarloSection {
    pub seed: u64,
    /// Zero skips the resampling.
    pub samples: usize,
    pub rel_noise: f64,
}

impl Default for MonteCarloSection {
    fn default() -> Self {
        MonteCarloSection {
            seed: 0,
            samples: 1000,
            rel_noise: DEFAULT_REL_NOISE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct QptSection {
    /// Weight of the fully depolarizing channel mixed into the drive maps.
    pub noise_mix: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub protocol: ProtocolSection,
    pub thermal: ThermalSection,
    pub cycle: CycleSection,
    pub sweep: SweepSection,
    pub output: OutputSection,
    pub monte_carlo: MonteCarloSection,
    pub qpt: QptSection,
}

/// Line of `key` inside `[section]`, 1-based.
fn locate(text: &str, section: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if let Some(rest) = line.strip_prefix('[') {
            current = rest.trim_end_matches(']').trim().to_string();
            continue;
        }
        if current == section {
            if let Some((k, _)) = line.split_once('=') {
                if k.trim() == key {
                    return Some(i + 1);
                }
            }
        }
    }
    None
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let cfg: RunConfig = toml::from_str(text).map_err(|e| ConfigError {
        line: e.span().map(|s| line_of(text, s.start)),
        message: e.message().to_string(),
    })?;
    cfg.validate()
        .map_err(|(section, key, message)| ConfigError {
            line: locate(text, section, key),
            message: format!("{section}.{key}: {message}"),
        })?;
    Ok(cfg)
}

pub fn to_toml(cfg: &RunConfig) -> String {
    toml::to_string(cfg).expect("run configuration always serializes")
}

type Invalid = (&'static str, &'static str, String);

fn positive(section: &'static str, key: &'static str, v: f64) -> Result<(), Invalid> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err((
            section,
            key,
            format!("must be positive and finite, got {v}"),
        ))
    }
}

impl RunConfig {
    /// Checks every value range; errors name the section and key.
    pub fn validate(&self) -> Result<(), Invalid> {
        positive("protocol", "nu1", self.protocol.nu1)?;
        positive("protocol", "nu2", self.protocol.nu2)?;
        if self.protocol.n_steps == 0 {
            return Err(("protocol", "n_steps", "must be at least 1".into()));
        }
        positive("thermal", "kt_cold", self.thermal.kt_cold)?;
        match (self.thermal.hot_option, self.thermal.kt_hot) {
            (HotOption::Custom, None) => {
                return Err((
                    "thermal",
                    "kt_hot",
                    "required when hot_option is custom".into(),
                ))
            }
            (HotOption::Custom, Some(v)) => {
                if !(v > 0.0) {
                    return Err(("thermal", "kt_hot", format!("must be positive, got {v}")));
                }
            }
            (_, Some(_)) => {
                return Err((
                    "thermal",
                    "kt_hot",
                    "only allowed with hot_option = \"custom\"".into(),
                ))
            }
            _ => {}
        }
        positive("cycle", "t_therm", self.cycle.t_therm)?;
        if !(self.cycle.t_cool >= 0.0 && self.cycle.t_cool.is_finite()) {
            return Err((
                "cycle",
                "t_cool",
                format!("must be nonnegative, got {}", self.cycle.t_cool),
            ));
        }
        if self.sweep.tau_list.is_empty() {
            return Err(("sweep", "tau_list", "must not be empty".into()));
        }
        for &tau in &self.sweep.tau_list {
            positive("sweep", "tau_list", tau)?;
        }
        positive("sweep", "tau", self.sweep.tau)?;
        positive("output", "lorentzian_fwhm", self.output.lorentzian_fwhm)?;
        if !(self.output.curve_max > self.output.curve_min) {
            return Err(("output", "curve_max", "must exceed curve_min".into()));
        }
        if self.output.curve_points == 1 {
            return Err((
                "output",
                "curve_points",
                "use 0 to disable or at least 2".into(),
            ));
        }
        if !(self.monte_carlo.rel_noise >= 0.0 && self.monte_carlo.rel_noise.is_finite()) {
            return Err(("monte_carlo", "rel_noise", "must be nonnegative".into()));
        }
        if !(0.0..=1.0).contains(&self.qpt.noise_mix) {
            return Err(("qpt", "noise_mix", "must lie in [0, 1]".into()));
        }
        Ok(())
    }

    pub fn kt_hot(&self) -> f64 {
        match self.thermal.hot_option {
            HotOption::A => KT_HOT_OPTION_A_PEV,
            HotOption::B => KT_HOT_OPTION_B_PEV,
            HotOption::Custom => self.thermal.kt_hot.unwrap_or(f64::NAN),
        }
    }

    pub fn thermal_params(&self) -> qotto_core::Result<ThermalParams> {
        ThermalParams::new(self.thermal.kt_cold, self.kt_hot())
    }

    /// Cycle configuration at drive duration `tau`.
    pub fn cycle_config(&self, tau: f64) -> qotto_core::Result<CycleConfig> {
        let protocol =
            DriveProtocol::new(self.protocol.nu1, self.protocol.nu2, tau, Phase::Expansion)?;
        let mut cfg = CycleConfig::new(protocol, self.thermal_params()?);
        cfg.n_steps = self.protocol.n_steps;
        cfg.t_therm = self.cycle.t_therm;
        cfg.t_cool = self.cycle.t_cool;
        Ok(cfg)
    }

    /// Evenly spaced energies for the broadened curves; empty when disabled.
    pub fn curve_grid(&self) -> Vec<f64> {
        let o = &self.output;
        if o.curve_points == 0 {
            return Vec::new();
        }
        let step = (o.curve_max - o.curve_min) / (o.curve_points - 1) as f64;
        (0..o.curve_points)
            .map(|i| o.curve_min + step * i as f64)
            .collect()
    }
}
