//! Experiment specs: a flat TOML file of dotted keys plus `key=value` overrides.
//!
//! ```toml
//! grid.side_count = 11
//! sensors.speed = 0.05
//! reward.alpha_mode = "auto"
//! experiment.schemes = ["crmi:zero:1", "gamma1:auto:1"]
//! experiment.ratios = [5, 10, 50]
//! experiment.seeds = 10
//! ```
//!
//! Tables and dotted keys are equivalent (`[grid]` + `side_count = 11`).

use std::collections::BTreeMap;
use std::path::{Path as FsPath, PathBuf};

use serde::{Deserialize, Serialize};
use toml::Value;

use crate::crmi::{AlphaMode, CrmiHorizon, RewardWeights};
use crate::engine::EpisodeConfig;
use crate::error::{Error, Result};
use crate::planning::PlanMode;
use crate::workspace::VertexId;

/// Every key the loader accepts.
pub const KNOWN_KEYS: &[&str] = &[
    "grid.side_count",
    "grid.half_width",
    "threat.N_P",
    "threat.sigma_P",
    "threat.theta_max",
    "threat.width",
    "threat.coverage_floor",
    "dynamics.rho",
    "sensors.count",
    "sensors.speed",
    "ego.speed",
    "ego.start",
    "ego.goal",
    "noise.sigma_R",
    "noise.chi",
    "reward.gamma",
    "reward.alpha_mode",
    "run.seed",
    "run.tick_per_edge",
    "run.max_ticks",
    "plan.mode",
    "crmi.horizon",
    "benchmark.time_varying",
    "experiment.schemes",
    "experiment.ratios",
    "experiment.seeds",
    "experiment.reference_ratio",
    "experiment.output_dir",
    "experiment.workers",
];

/// One placement rule compared in an experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scheme {
    pub name: String,
    pub reward: RewardWeights,
}

impl Scheme {
    /// Parses `name:alpha:gamma`, with alpha `auto`, `zero` or a number.
    pub fn parse(text: &str) -> Result<Self> {
        let parts: Vec<&str> = text.split(':').map(str::trim).collect();
        let [name, alpha, gamma] = parts[..] else {
            return Err(Error::Config(format!("scheme {text:?} is not of the form name:alpha:gamma")));
        };
        if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || "._-".contains(c)) {
            return Err(Error::Config(format!("invalid scheme name {name:?}")));
        }
        let alpha = parse_alpha(&Value::String(alpha.to_string()))?;
        let gamma: f64 = gamma
            .parse()
            .map_err(|_| Error::Config(format!("scheme {name}: gamma {gamma:?} is not a number")))?;
        let reward = RewardWeights::new(gamma, alpha).map_err(|e| Error::Config(format!("scheme {name}: {e}")))?;
        Ok(Scheme {
            name: name.to_string(),
            reward,
        })
    }
}

/// A full comparative experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub base: EpisodeConfig,
    pub schemes: Vec<Scheme>,
    /// Sensor-to-ego speed ratios; the sensor speed is `ratio · ego speed`.
    pub ratios: Vec<f64>,
    pub seeds: Vec<u64>,
    /// Ratio used for the efficiency table.
    pub reference_ratio: f64,
    pub output_dir: PathBuf,
    pub workers: usize,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        let scheme = |text: &str| Scheme::parse(text).expect("valid built-in scheme");
        ExperimentSpec {
            base: EpisodeConfig::default(),
            schemes: vec![
                scheme("crmi:zero:1"),
                scheme("gamma1:auto:1"),
                scheme("gamma0.5:auto:0.5"),
                scheme("gamma0:auto:0"),
            ],
            ratios: vec![5.0, 10.0, 50.0],
            seeds: (0..10).collect(),
            reference_ratio: 5.0,
            output_dir: PathBuf::from("results"),
            workers: 1,
        }
    }
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.schemes.is_empty() || self.ratios.is_empty() || self.seeds.is_empty() {
            return Err(Error::Config("an experiment needs at least one scheme, ratio and seed".into()));
        }
        let mut names: Vec<&str> = self.schemes.iter().map(|s| s.name.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Config("scheme names must be unique".into()));
        }
        if let Some(r) = self.ratios.iter().find(|&&r| !(r > 1.0 && r.is_finite())) {
            return Err(Error::Config(format!("speed ratio {r} must exceed 1")));
        }
        let mut seeds = self.seeds.clone();
        seeds.sort_unstable();
        if seeds.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Config("seeds must be unique".into()));
        }
        if !self.ratios.contains(&self.reference_ratio) {
            return Err(Error::Config(format!(
                "reference ratio {} is not among the experiment ratios",
                self.reference_ratio
            )));
        }
        if self.workers == 0 {
            return Err(Error::Config("workers must be positive".into()));
        }
        let mut probe = self.base.clone();
        probe.sensor_speed = probe.ego_speed * self.ratios.iter().cloned().fold(f64::INFINITY, f64::min);
        probe.validate()
    }

    /// Episode config for one `(scheme, ratio, seed)` cell.
    pub fn episode_config(&self, scheme: &Scheme, ratio: f64, seed: u64) -> EpisodeConfig {
        let mut cfg = self.base.clone();
        cfg.reward = scheme.reward;
        cfg.sensor_speed = cfg.ego_speed * ratio;
        cfg.seed = seed;
        cfg
    }
}

/// Reads a spec file and applies `key=value` overrides on top.
pub fn load_spec(path: &FsPath, overrides: &[String]) -> Result<ExperimentSpec> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_spec(&text, overrides).map_err(|e| match e {
        Error::Config(reason) => Error::Config(format!("{}: {reason}", path.display())),
        other => other,
    })
}

/// Parses spec text and applies overrides.
pub fn parse_spec(text: &str, overrides: &[String]) -> Result<ExperimentSpec> {
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config(e.message().to_string()))?;
    let mut entries = BTreeMap::new();
    flatten("", &table, &mut entries);
    for item in overrides {
        let (key, value) = parse_override(item)?;
        entries.insert(key, value);
    }
    spec_from_entries(&entries)
}

fn flatten(prefix: &str, table: &toml::Table, out: &mut BTreeMap<String, Value>) {
    for (key, value) in table {
        let full = if prefix.is_empty() {
            key.clone()
        } else {
            format!("{prefix}.{key}")
        };
        match value {
            Value::Table(inner) => flatten(&full, inner, out),
            other => {
                out.insert(full, other.clone());
            }
        }
    }
}

/// Splits `key=value`; the value is read as a TOML literal, or as a bare string.
pub fn parse_override(item: &str) -> Result<(String, Value)> {
    let (key, raw) = item
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override {item:?} is not key=value")))?;
    let key = key.trim().to_string();
    let raw = raw.trim();
    let value = format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()));
    Ok((key, value))
}

fn spec_from_entries(entries: &BTreeMap<String, Value>) -> Result<ExperimentSpec> {
    if let Some(key) = entries.keys().find(|k| !KNOWN_KEYS.contains(&k.as_str())) {
        return Err(Error::Config(format!("unknown key {key:?}")));
    }
    let mut spec = ExperimentSpec::default();
    let cfg = &mut spec.base;
    for (key, value) in entries {
        let k = key.as_str();
        match k {
            "grid.side_count" => cfg.side_count = as_count(k, value)?,
            "grid.half_width" => cfg.scenario.half_width = as_float(k, value)?,
            "threat.N_P" => cfg.n_params = as_count(k, value)?,
            "threat.sigma_P" => cfg.scenario.sigma_p = as_float(k, value)?,
            "threat.theta_max" => cfg.scenario.theta_max = as_float(k, value)?,
            "threat.width" => cfg.scenario.width = Some(as_float(k, value)?),
            "threat.coverage_floor" => cfg.scenario.coverage_floor = as_float(k, value)?,
            "dynamics.rho" => cfg.scenario.rho = as_float(k, value)?,
            "sensors.count" => cfg.sensor_count = as_count(k, value)?,
            "sensors.speed" => cfg.sensor_speed = as_float(k, value)?,
            "ego.speed" => cfg.ego_speed = as_float(k, value)?,
            "ego.start" => cfg.start = Some(as_vertex(k, value)?),
            "ego.goal" => cfg.goal = Some(as_vertex(k, value)?),
            "noise.sigma_R" => cfg.noise_std = as_float(k, value)?,
            "noise.chi" => cfg.prior_scale = as_float(k, value)?,
            "reward.gamma" => cfg.reward.gamma = as_float(k, value)?,
            "reward.alpha_mode" => cfg.reward.alpha = parse_alpha(value)?,
            "run.seed" => cfg.seed = as_count(k, value)? as u64,
            "run.tick_per_edge" => {
                cfg.ticks_per_edge = u32::try_from(as_count(k, value)?)
                    .map_err(|_| Error::Config(format!("{k}: value too large")))?
            }
            "run.max_ticks" => cfg.max_ticks = as_count(k, value)? as u64,
            "plan.mode" => {
                cfg.plan_mode = match as_str(k, value)? {
                    "frozen" => PlanMode::Frozen,
                    "propagated" => PlanMode::Propagated,
                    other => return Err(Error::Config(format!("{k}: unknown mode {other:?}"))),
                }
            }
            "crmi.horizon" => {
                cfg.crmi_horizon = match as_str(k, value)? {
                    "one_step" => CrmiHorizon::OneStep,
                    "travel_time" => CrmiHorizon::TravelTime,
                    other => return Err(Error::Config(format!("{k}: unknown horizon {other:?}"))),
                }
            }
            "benchmark.time_varying" => {
                cfg.benchmark_time_varying = value
                    .as_bool()
                    .ok_or_else(|| Error::Config(format!("{k}: expected true or false")))?
            }
            // experiment keys are applied below, after the base config
            _ => {}
        }
    }
    if let Some(v) = entries.get("experiment.schemes") {
        spec.schemes = as_array("experiment.schemes", v)?
            .iter()
            .map(|item| Scheme::parse(as_str("experiment.schemes", item)?))
            .collect::<Result<_>>()?;
    }
    if let Some(v) = entries.get("experiment.ratios") {
        spec.ratios = as_array("experiment.ratios", v)?
            .iter()
            .map(|item| as_float("experiment.ratios", item))
            .collect::<Result<_>>()?;
    }
    if let Some(v) = entries.get("experiment.seeds") {
        spec.seeds = match v {
            // a count means seeds 0..n
            Value::Integer(_) => (0..as_count("experiment.seeds", v)? as u64).collect(),
            _ => as_array("experiment.seeds", v)?
                .iter()
                .map(|item| Ok(as_count("experiment.seeds", item)? as u64))
                .collect::<Result<_>>()?,
        };
    }
    if let Some(v) = entries.get("experiment.reference_ratio") {
        spec.reference_ratio = as_float("experiment.reference_ratio", v)?;
    }
    if let Some(v) = entries.get("experiment.output_dir") {
        spec.output_dir = PathBuf::from(as_str("experiment.output_dir", v)?);
    }
    if let Some(v) = entries.get("experiment.workers") {
        spec.workers = as_count("experiment.workers", v)?;
    }
    spec.validate()?;
    Ok(spec)
}

fn parse_alpha(value: &Value) -> Result<AlphaMode> {
    match value {
        Value::String(s) if s == "auto" => Ok(AlphaMode::Auto),
        Value::String(s) if s == "zero" => Ok(AlphaMode::Zero),
        Value::String(s) => s
            .parse::<f64>()
            .map(AlphaMode::Fixed)
            .map_err(|_| Error::Config(format!("alpha mode {s:?} is not auto, zero or a number"))),
        Value::Integer(i) => Ok(AlphaMode::Fixed(*i as f64)),
        Value::Float(f) => Ok(AlphaMode::Fixed(*f)),
        other => Err(Error::Config(format!("alpha mode {other} is not auto, zero or a number"))),
    }
}

fn as_float(key: &str, value: &Value) -> Result<f64> {
    match value {
        Value::Float(f) => Ok(*f),
        Value::Integer(i) => Ok(*i as f64),
        other => Err(Error::Config(format!("{key}: expected a number, got {other}"))),
    }
}

fn as_count(key: &str, value: &Value) -> Result<usize> {
    match value {
        Value::Integer(i) if *i >= 0 => Ok(*i as usize),
        other => Err(Error::Config(format!("{key}: expected a nonnegative integer, got {other}"))),
    }
}

fn as_vertex(key: &str, value: &Value) -> Result<VertexId> {
    VertexId::new(as_count(key, value)?).map_err(|e| Error::Config(format!("{key}: {e}")))
}

fn as_str<'a>(key: &str, value: &'a Value) -> Result<&'a str> {
    value
        .as_str()
        .ok_or_else(|| Error::Config(format!("{key}: expected a string, got {value}")))
}

fn as_array<'a>(key: &str, value: &'a Value) -> Result<&'a Vec<Value>> {
    value
        .as_array()
        .ok_or_else(|| Error::Config(format!("{key}: expected an array, got {value}")))
}
