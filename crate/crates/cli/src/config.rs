//! Plain-text `key = value` configuration files.
//!
//! Blank lines and lines starting with `#` are ignored. Every key must be
//! known and may appear once. Angles are radians; `pi` may be written
//! symbolically (`pi/3`, `2*pi/5`).

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ssdse::entanglement::EpsilonRule;
use ssdse::oracle::{Defect, OracleConfig};
use ssdse::protocol::SharpnessSchedule;
use ssdse::states::{EnsembleSpec, GeneralFamilyParams, SpecialFamilyParams};
use thiserror::Error;

use crate::output::{Format, Value};

pub const KNOWN_KEYS: &[&str] = &[
    "family",
    "mu1",
    "mu2",
    "theta",
    "gamma1",
    "gamma2",
    "schedule.mode",
    "schedule.lambdas",
    "schedule.lambda1",
    "schedule.epsilon0",
    "schedule.epsilon_margin",
    "rounds",
    "schmidt_basis",
    "output.path",
    "output.format",
    "seed",
    "oracle.samples",
    "oracle.rounds",
    "oracle.tolerance",
    "oracle.inject_defect",
];

const GENERAL_KEYS: &[&str] = &["mu1", "mu2", "theta"];
const SPECIAL_KEYS: &[&str] = &["gamma1", "gamma2"];

pub const DEFAULT_LAMBDA1: f64 = 1e-3;
pub const DEFAULT_WITNESS_ROUNDS: usize = 10;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("line {line}: expected `key = value`, found `{text}`")]
    Syntax { line: usize, text: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key `{key}` given twice")]
    DuplicateKey { line: usize, key: String },
    #[error("missing required key `{0}`")]
    Missing(&'static str),
    #[error("`{key}`: {reason}")]
    Invalid { key: String, reason: String },
    #[error(
        "`{key}` = {value} looks like degrees; angles are radians (did you mean {radians:.6}?)"
    )]
    Degrees {
        key: String,
        value: f64,
        radians: f64,
    },
    #[error(transparent)]
    Domain(#[from] ssdse::Error),
}

fn invalid(key: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key: key.to_string(),
        reason: reason.into(),
    }
}

/// Raw entries, keyed by name, with the line each came from.
#[derive(Debug, Clone, Default)]
pub struct KeyValues {
    entries: BTreeMap<String, (usize, String)>,
}

impl KeyValues {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (key, value) = trimmed.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line,
                text: trimmed.to_string(),
            })?;
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() || value.is_empty() {
                return Err(ConfigError::Syntax {
                    line,
                    text: trimmed.to_string(),
                });
            }
            if !KNOWN_KEYS.contains(&key) {
                return Err(ConfigError::UnknownKey {
                    line,
                    key: key.to_string(),
                });
            }
            if entries
                .insert(key.to_string(), (line, value.to_string()))
                .is_some()
            {
                return Err(ConfigError::DuplicateKey {
                    line,
                    key: key.to_string(),
                });
            }
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(_, v)| v.as_str())
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    fn require(&self, key: &'static str) -> Result<&str, ConfigError> {
        self.get(key).ok_or(ConfigError::Missing(key))
    }

    fn float(&self, key: &'static str) -> Result<Option<f64>, ConfigError> {
        self.get(key).map(|v| parse_float(key, v)).transpose()
    }

    fn require_float(&self, key: &'static str) -> Result<f64, ConfigError> {
        parse_float(key, self.require(key)?)
    }

    fn parsed<T: FromStr>(&self, key: &'static str) -> Result<Option<T>, ConfigError>
    where
        T::Err: std::fmt::Display,
    {
        self.get(key)
            .map(|v| v.parse::<T>().map_err(|e| invalid(key, e.to_string())))
            .transpose()
    }
}

/// A finite float; `pi`, `pi/N`, `M*pi` and `M*pi/N` are accepted too.
pub fn parse_float(key: &str, text: &str) -> Result<f64, ConfigError> {
    let t = text.trim();
    let value = if t.contains("pi") {
        parse_pi_expr(t).ok_or_else(|| invalid(key, format!("cannot parse `{t}` as a number")))?
    } else {
        t.parse::<f64>()
            .map_err(|_| invalid(key, format!("cannot parse `{t}` as a number")))?
    };
    if !value.is_finite() {
        return Err(invalid(key, "value must be finite"));
    }
    Ok(value)
}

fn parse_pi_expr(t: &str) -> Option<f64> {
    let (num, den) = match t.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim().parse::<f64>().ok()?),
        None => (t, 1.0),
    };
    let factor = match num.split_once('*') {
        Some((m, p)) if p.trim() == "pi" => m.trim().parse::<f64>().ok()?,
        None if num == "pi" => 1.0,
        _ => return None,
    };
    Some(factor * PI / den)
}

/// Rejects angles above `2π`, which are almost always degrees.
pub fn check_angle(key: &str, value: f64) -> Result<f64, ConfigError> {
    if value.abs() > TAU {
        return Err(ConfigError::Degrees {
            key: key.to_string(),
            value,
            radians: value.to_radians(),
        });
    }
    Ok(value)
}

pub fn parse_bool(key: &str, text: &str) -> Result<bool, ConfigError> {
    match text.to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(invalid(
            key,
            format!("expected true or false, found `{text}`"),
        )),
    }
}

/// Comma-separated floats, optionally wrapped in brackets.
pub fn parse_list(key: &str, text: &str) -> Result<Vec<f64>, ConfigError> {
    let inner = text.trim().trim_start_matches('[').trim_end_matches(']');
    if inner.trim().is_empty() {
        return Err(invalid(key, "list is empty"));
    }
    inner.split(',').map(|v| parse_float(key, v)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScheduleMode {
    Fixed,
    Witness,
}

impl FromStr for ScheduleMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fixed" => Ok(ScheduleMode::Fixed),
            "witness" | "witness_driven" | "witness-driven" => Ok(ScheduleMode::Witness),
            other => Err(format!("expected fixed or witness, found `{other}`")),
        }
    }
}

/// Where and how results are written.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct OutputConfig {
    pub path: Option<PathBuf>,
    pub format: Option<Format>,
}

impl OutputConfig {
    pub fn from_keys(kv: &KeyValues) -> Result<Self, ConfigError> {
        Ok(Self {
            path: kv.get("output.path").map(PathBuf::from),
            format: kv.parsed("output.format")?,
        })
    }
}

/// A validated `run` configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub ensemble: EnsembleSpec,
    pub schedule: SharpnessSchedule,
    pub schmidt_basis: bool,
    pub seed: u64,
    pub output: OutputConfig,
}

impl RunConfig {
    pub fn from_keys(kv: &KeyValues) -> Result<Self, ConfigError> {
        let ensemble = match kv.require("family")? {
            "general" => {
                reject_keys(kv, SPECIAL_KEYS, "general")?;
                let theta = check_angle("theta", kv.require_float("theta")?)?;
                EnsembleSpec::General(GeneralFamilyParams::new(
                    kv.require_float("mu1")?,
                    kv.require_float("mu2")?,
                    theta,
                )?)
            }
            "special" => {
                reject_keys(kv, GENERAL_KEYS, "special")?;
                EnsembleSpec::Special(SpecialFamilyParams::new(
                    kv.require_float("gamma1")?,
                    kv.require_float("gamma2")?,
                )?)
            }
            other => {
                return Err(invalid(
                    "family",
                    format!("expected general or special, found `{other}`"),
                ))
            }
        };

        let mode = kv
            .parsed::<ScheduleMode>("schedule.mode")?
            .unwrap_or(ScheduleMode::Fixed);
        let rounds = kv.parsed::<usize>("rounds")?;
        let schedule = match mode {
            ScheduleMode::Fixed => {
                for key in [
                    "schedule.lambda1",
                    "schedule.epsilon0",
                    "schedule.epsilon_margin",
                ] {
                    if kv.contains(key) {
                        return Err(invalid(key, "only applies to schedule.mode = witness"));
                    }
                }
                let lambdas = parse_list("schedule.lambdas", kv.require("schedule.lambdas")?)?;
                if let Some(r) = rounds {
                    if r != lambdas.len() {
                        return Err(invalid(
                            "rounds",
                            format!(
                                "{r} rounds but schedule.lambdas has {} values",
                                lambdas.len()
                            ),
                        ));
                    }
                }
                SharpnessSchedule::fixed(lambdas)?
            }
            ScheduleMode::Witness => {
                if kv.contains("schedule.lambdas") {
                    return Err(invalid(
                        "schedule.lambdas",
                        "only applies to schedule.mode = fixed",
                    ));
                }
                let defaults = EpsilonRule::default();
                let rule = EpsilonRule::new(
                    kv.float("schedule.epsilon0")?
                        .unwrap_or(defaults.epsilon0()),
                    kv.float("schedule.epsilon_margin")?
                        .unwrap_or(defaults.margin()),
                )?;
                SharpnessSchedule::witness_driven(
                    kv.float("schedule.lambda1")?.unwrap_or(DEFAULT_LAMBDA1),
                    rule,
                    rounds.unwrap_or(DEFAULT_WITNESS_ROUNDS),
                )?
            }
        };

        let schmidt_basis = kv
            .get("schmidt_basis")
            .map(|v| parse_bool("schmidt_basis", v))
            .transpose()?
            .unwrap_or(false);

        Ok(Self {
            ensemble,
            schedule,
            schmidt_basis,
            seed: kv.parsed("seed")?.unwrap_or(0),
            output: OutputConfig::from_keys(kv)?,
        })
    }

    /// Resolved settings, echoed into JSON output.
    pub fn echo(&self) -> Vec<(&'static str, Value)> {
        let mut out = Vec::new();
        match &self.ensemble {
            EnsembleSpec::General(p) => {
                out.push(("family", Value::Text("general".into())));
                out.push(("mu1", Value::Num(p.mu1())));
                out.push(("mu2", Value::Num(p.mu2())));
                out.push(("theta", Value::Num(p.theta())));
            }
            EnsembleSpec::Special(p) => {
                out.push(("family", Value::Text("special".into())));
                out.push(("gamma1", Value::Num(p.gamma1())));
                out.push(("gamma2", Value::Num(p.gamma2())));
            }
        }
        match &self.schedule {
            SharpnessSchedule::Fixed { lambdas } => {
                out.push(("schedule.mode", Value::Text("fixed".into())));
                out.push(("schedule.lambdas", Value::List(lambdas.clone())));
            }
            SharpnessSchedule::WitnessDriven {
                lambda1,
                epsilon,
                rounds,
            } => {
                out.push(("schedule.mode", Value::Text("witness".into())));
                out.push(("schedule.lambda1", Value::Num(*lambda1)));
                out.push(("schedule.epsilon0", Value::Num(epsilon.epsilon0())));
                out.push(("schedule.epsilon_margin", Value::Num(epsilon.margin())));
                out.push(("rounds", Value::Int(*rounds as u64)));
            }
        }
        out.push(("schmidt_basis", Value::Bool(self.schmidt_basis)));
        out.push(("seed", Value::Int(self.seed)));
        out
    }
}

fn reject_keys(kv: &KeyValues, keys: &[&str], family: &str) -> Result<(), ConfigError> {
    match keys.iter().find(|k| kv.contains(k)) {
        Some(k) => Err(invalid(k, format!("does not apply to family {family}"))),
        None => Ok(()),
    }
}

/// Oracle settings; every key is optional.
pub fn oracle_config(kv: &KeyValues) -> Result<OracleConfig, ConfigError> {
    let defaults = OracleConfig::default();
    let config = OracleConfig {
        samples: kv.parsed("oracle.samples")?.unwrap_or(defaults.samples),
        rounds: kv.parsed("oracle.rounds")?.unwrap_or(defaults.rounds),
        seed: kv.parsed("seed")?.unwrap_or(defaults.seed),
        tolerance: kv.float("oracle.tolerance")?.unwrap_or(defaults.tolerance),
        inject: kv.parsed::<Defect>("oracle.inject_defect")?,
    };
    config.validate()?;
    Ok(config)
}
