//! `key = value` experiment configuration.
//!
//! ```text
//! # Fig-1 style run
//! game = bilinear
//! a = 5/9
//! b = 5/27
//! c = 1/27
//! mu0 = uniform
//! max_iters = 5000
//! replications = 20
//! ```
//!
//! Blank lines and `#` comments are ignored. Later keys win, so overrides
//! are applied by feeding extra `key=value` pairs through [`ExperimentConfig::set`].

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::game::registry;
use crate::learner::Thinning;
use crate::schedule::{parse_number, ScheduleExponents};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum InitialMeans {
    /// Each replication draws `μ(0)` uniformly from the action boxes.
    Uniform,
    Fixed(Vec<f64>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub game: String,
    pub exponents: ScheduleExponents,
    pub mu0: InitialMeans,
    pub max_iters: u64,
    pub replications: u64,
    pub base_seed: u64,
    pub regularized: bool,
    pub thinning: Thinning,
    pub output: PathBuf,
    pub format: OutputFormat,
    pub allow_invalid_schedule: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            game: "bilinear".into(),
            exponents: ScheduleExponents::default(),
            mu0: InitialMeans::Uniform,
            max_iters: 5000,
            replications: 20,
            base_seed: 0,
            regularized: true,
            thinning: Thinning::Default,
            output: PathBuf::from("out"),
            format: OutputFormat::Csv,
            allow_invalid_schedule: false,
        }
    }
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(Error::usage(format!(
            "{key}: expected a boolean, got '{v}'"
        ))),
    }
}

fn parse_u64(key: &str, v: &str) -> Result<u64> {
    v.parse()
        .map_err(|_| Error::usage(format!("{key}: expected a non-negative integer, got '{v}'")))
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut config = Self::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::usage(format!(
                    "line {}: expected 'key = value', got '{raw}'",
                    n + 1
                ))
            })?;
            config
                .set(key.trim(), value.trim())
                .map_err(|e| Error::usage(format!("line {}: {e}", n + 1)))?;
        }
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Applies a `key=value` override string.
    pub fn apply_override(&mut self, pair: &str) -> Result<()> {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| Error::usage(format!("override '{pair}' is not key=value")))?;
        self.set(k.trim(), v.trim())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "game" => self.game = value.to_string(),
            "a" => self.exponents.a = parse_number(value)?,
            "b" => self.exponents.b = parse_number(value)?,
            "c" => self.exponents.c = parse_number(value)?,
            "exponents" => {
                let parts: Vec<f64> = value.split(',').map(parse_number).collect::<Result<_>>()?;
                match parts[..] {
                    [a, b, c] => self.exponents = ScheduleExponents { a, b, c },
                    _ => return Err(Error::usage("exponents: expected 'a, b, c'")),
                }
            }
            "mu0" => {
                self.mu0 = if value.eq_ignore_ascii_case("uniform") {
                    InitialMeans::Uniform
                } else {
                    InitialMeans::Fixed(value.split(',').map(parse_number).collect::<Result<_>>()?)
                }
            }
            "max_iters" => self.max_iters = parse_u64(key, value)?,
            "replications" => self.replications = parse_u64(key, value)?,
            "base_seed" | "seed" => self.base_seed = parse_u64(key, value)?,
            "regularized" => self.regularized = parse_bool(key, value)?,
            "allow_invalid_schedule" => self.allow_invalid_schedule = parse_bool(key, value)?,
            "thinning" => {
                self.thinning = if value.eq_ignore_ascii_case("default") {
                    Thinning::Default
                } else {
                    Thinning::Every(parse_u64(key, value)?.max(1))
                }
            }
            "output" => self.output = PathBuf::from(value),
            "format" => {
                self.format = match value.to_ascii_lowercase().as_str() {
                    "csv" => OutputFormat::Csv,
                    "json" => OutputFormat::Json,
                    _ => {
                        return Err(Error::usage(format!(
                            "format: expected csv or json, got '{value}'"
                        )))
                    }
                }
            }
            _ => return Err(Error::usage(format!("unknown config key '{key}'"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let game = registry(&self.game)?;
        ScheduleExponents::new(self.exponents.a, self.exponents.b, self.exponents.c)?;
        if self.replications == 0 {
            return Err(Error::usage("replications must be at least 1"));
        }
        if self.max_iters == 0 {
            return Err(Error::usage("max_iters must be at least 1"));
        }
        if let InitialMeans::Fixed(v) = &self.mu0 {
            if v.len() != game.joint_dim() {
                return Err(Error::usage(format!(
                    "mu0 has {} entries, game '{}' needs {}",
                    v.len(),
                    self.game,
                    game.joint_dim()
                )));
            }
        }
        Ok(())
    }
}
