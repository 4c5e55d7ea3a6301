//! Run parameters shared by every command, as flags or as a TOML file.

use std::path::PathBuf;

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use mimo_harq::dimension::OutageConstraint;
use mimo_harq::mcsim::{CorrelationSpec, McSettings};
use mimo_harq::model::{db_to_linear, Fading, HarqConfig, PaProfile, PowerSchedule};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FadingArg {
    Quasi,
    Slow,
    Fast,
}

impl From<FadingArg> for Fading {
    fn from(f: FadingArg) -> Self {
        match f {
            FadingArg::Quasi => Fading::QuasiStatic,
            FadingArg::Slow => Fading::SlowFading,
            FadingArg::Fast => Fading::FastFading,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodArg {
    Closed,
    Highsnr,
    Search,
    Mc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FormatArg {
    #[default]
    Csv,
    Json,
}

/// Sample counts accept plain integers and integral floats such as `1e8`.
pub fn parse_count(s: &str) -> Result<u64, String> {
    if let Ok(n) = s.parse::<u64>() {
        return Ok(n);
    }
    let x: f64 = s.parse().map_err(|_| format!("not a number: {s}"))?;
    if x.is_finite() && x >= 0.0 && x.fract() == 0.0 && x <= u64::MAX as f64 {
        Ok(x as u64)
    } else {
        Err(format!("not a non-negative integer: {s}"))
    }
}

/// Every flag is optional here; commands apply their own defaults. Values
/// given on the command line take precedence over a `--config` file.
#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
#[command(next_help_heading = "Run parameters")]
pub struct RunConfig {
    /// Antenna regime, 1 to 4.
    #[arg(long = "case", value_parser = clap::value_parser!(u8).range(1..=4))]
    pub case: Option<u8>,
    #[arg(long)]
    pub nt: Option<u32>,
    #[arg(long)]
    pub nr: Option<u32>,
    /// Antenna ratio N_t / N_r (cases 3 and 4).
    #[arg(long)]
    pub k: Option<f64>,
    #[arg(long, value_enum)]
    pub fading: Option<FadingArg>,
    /// Maximum number of HARQ rounds.
    #[arg(long)]
    pub m: Option<u32>,
    /// Channel realizations per round (fast fading).
    #[arg(long)]
    pub t: Option<u32>,
    /// Initial rates in nats per channel use, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub rate: Vec<f64>,
    /// Transmit SNRs in dB, comma separated.
    #[arg(long = "snr-db", value_delimiter = ',', allow_hyphen_values = true)]
    pub snr_db: Vec<f64>,
    /// Outage targets, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub theta: Vec<f64>,
    /// Correlation between neighbouring transmit antennas.
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long = "pa-eps")]
    pub pa_eps: Option<f64>,
    #[arg(long = "pa-theta")]
    pub pa_theta: Option<f64>,
    #[arg(long = "pa-max-db", allow_hyphen_values = true)]
    pub pa_max_db: Option<f64>,
    /// Consumed powers in dB, comma separated.
    #[arg(
        long = "power-cons-db",
        value_delimiter = ',',
        allow_hyphen_values = true
    )]
    pub power_cons_db: Vec<f64>,
    /// Per-round transmit powers in dB, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub schedule: Vec<f64>,
    /// Monte Carlo packet samples (accepts 1e6 notation).
    #[arg(long, value_parser = parse_count)]
    pub samples: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
    /// Figure preset for `sweep`: fig1 .. fig7 (fig5 = fig5a, fig6 = fig6a).
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
    /// TOML file with defaults for any of these parameters.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

macro_rules! take {
    ($self:ident, $other:ident; $($f:ident),*) => {
        $( if $self.$f.is_none() { $self.$f = $other.$f; } )*
    };
}

macro_rules! take_vec {
    ($self:ident, $other:ident; $($f:ident),*) => {
        $( if $self.$f.is_empty() { $self.$f = $other.$f; } )*
    };
}

pub const DEFAULT_SEED: u64 = 1;

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Usage(format!("bad config file: {e}")))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Fills unset fields from `file`.
    pub fn merge(mut self, file: RunConfig) -> Self {
        take!(self, file; case, nt, nr, k, fading, m, t, beta, pa_eps, pa_theta, pa_max_db,
              samples, seed, workers, method, preset, out, format);
        take_vec!(self, file; rate, snr_db, theta, power_cons_db, schedule);
        self
    }

    /// Applies `--config` if present.
    pub fn resolve(self) -> Result<Self, CliError> {
        match &self.config {
            None => Ok(self),
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
                Ok(self.merge(Self::from_toml(&text)?))
            }
        }
    }

    pub fn require<T: Copy>(value: Option<T>, flag: &str) -> Result<T, CliError> {
        value.ok_or_else(|| CliError::Usage(format!("missing required flag --{flag}")))
    }

    pub fn harq(&self, rate: f64) -> Result<HarqConfig, CliError> {
        let fading = self.fading.unwrap_or(FadingArg::Quasi).into();
        Ok(HarqConfig::new(
            fading,
            self.m.unwrap_or(1),
            self.t.unwrap_or(1),
            rate,
        )?)
    }

    pub fn corr(&self) -> Result<CorrelationSpec, CliError> {
        Ok(CorrelationSpec::new(self.beta.unwrap_or(0.0))?)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    /// Monte Carlo settings: `--samples`, else `ceil(1000 / θ)` capped at
    /// 10^8, else 10^6.
    pub fn mc(&self, theta: Option<f64>) -> McSettings {
        let samples = self
            .samples
            .unwrap_or_else(|| theta.map_or(1_000_000, default_samples));
        McSettings::new(samples, self.seed()).with_workers(self.workers.unwrap_or(1))
    }

    /// The PA profile when any PA flag is given; missing ones take the
    /// ideal values (`ε = 1`, `ϑ = 0`, no saturation).
    pub fn pa(&self) -> Result<Option<PaProfile>, CliError> {
        if self.pa_eps.is_none() && self.pa_theta.is_none() && self.pa_max_db.is_none() {
            return Ok(None);
        }
        Ok(Some(PaProfile::new(
            self.pa_eps.unwrap_or(1.0),
            self.pa_theta.unwrap_or(0.0),
            self.pa_max_db.map_or(f64::INFINITY, db_to_linear),
        )?))
    }

    pub fn schedule(&self) -> Result<Option<PowerSchedule>, CliError> {
        if self.schedule.is_empty() {
            return Ok(None);
        }
        let powers = self.schedule.iter().map(|&d| db_to_linear(d)).collect();
        Ok(Some(PowerSchedule::new(powers)?))
    }

    pub fn constraints(&self) -> Result<Vec<OutageConstraint>, CliError> {
        self.theta
            .iter()
            .map(|&t| OutageConstraint::new(t).map_err(CliError::from))
            .collect()
    }

    pub fn format(&self) -> FormatArg {
        self.format.unwrap_or_default()
    }
}

/// `ceil(1000 / θ)` capped at 10^8.
pub fn default_samples(theta: f64) -> u64 {
    ((1000.0 / theta).ceil() as u64).min(100_000_000)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_in_float_notation() {
        assert_eq!(parse_count("1e8"), Ok(100_000_000));
        assert_eq!(parse_count("250"), Ok(250));
        assert_eq!(parse_count("2.5e1"), Ok(25));
        assert!(parse_count("1.5").is_err());
        assert!(parse_count("-3").is_err());
        assert!(parse_count("x").is_err());
    }

    #[test]
    fn default_sample_counts() {
        assert_eq!(default_samples(1e-3), 1_000_000);
        assert_eq!(default_samples(1e-4), 10_000_000);
        assert_eq!(default_samples(1e-5), 100_000_000);
        assert_eq!(default_samples(1e-7), 100_000_000);
    }

    #[test]
    fn toml_round_trip_is_idempotent() {
        let cfg = RunConfig {
            case: Some(2),
            nr: Some(2),
            fading: Some(FadingArg::Fast),
            m: Some(2),
            t: Some(2),
            rate: vec![1.0, 2.5],
            snr_db: vec![-5.0, 15.0],
            theta: vec![1e-4],
            samples: Some(1000),
            method: Some(MethodArg::Search),
            format: Some(FormatArg::Json),
            ..Default::default()
        };
        let text = cfg.to_toml();
        let back = RunConfig::from_toml(&text).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.to_toml(), text);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(RunConfig::from_toml("cases = 1").is_err());
    }

    #[test]
    fn flags_override_file() {
        let flags = RunConfig {
            rate: vec![3.0],
            m: Some(2),
            ..Default::default()
        };
        let file = RunConfig {
            rate: vec![1.0],
            m: Some(1),
            nt: Some(4),
            ..Default::default()
        };
        let merged = flags.merge(file);
        assert_eq!(merged.rate, vec![3.0]);
        assert_eq!(merged.m, Some(2));
        assert_eq!(merged.nt, Some(4));
    }
}
