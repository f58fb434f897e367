//! Run configuration: JSON file plus `--section.key value` overrides.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use sqg_core::biot_savart::Summation;
use sqg_core::evolution::{Integrator, Interpolation, TimeStepConfig};

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("malformed JSON: {0}")]
    Json(String),
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("invalid value for `{key}`: {reason}")]
    Invalid { key: String, reason: String },
    #[error("{0}")]
    Io(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    #[default]
    Simulate,
    VerifyKernels,
    Illposedness,
    LemmaSuite,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub h: f64,
    #[serde(rename = "L")]
    pub support: f64,
    pub margin: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            h: 1.0 / 128.0,
            support: 1.0,
            margin: 0.25,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KernelConfig {
    pub epsilon_over_h: f64,
    pub summation: Summation,
}

impl Default for KernelConfig {
    fn default() -> Self {
        Self {
            epsilon_over_h: 2.0,
            summation: Summation::Fft,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimeConfig {
    pub cfl: f64,
    pub t_end: f64,
    pub integrator: Integrator,
    pub interp: Interpolation,
    pub snapshot_every: usize,
}

impl Default for TimeConfig {
    fn default() -> Self {
        Self {
            cfl: 0.5,
            t_end: 0.5,
            integrator: Integrator::Rk4,
            interp: Interpolation::Cubic,
            snapshot_every: 0,
        }
    }
}

impl TimeConfig {
    pub fn step_config(&self) -> TimeStepConfig {
        TimeStepConfig {
            cfl: self.cfl,
            t_end: self.t_end,
            integrator: self.integrator,
            interp: self.interp,
            snapshot_every: self.snapshot_every,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum InitialKind {
    Model,
    #[default]
    GaussianXy,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitialConfig {
    pub kind: InitialKind,
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "B")]
    pub b: f64,
    pub r0: f64,
}

impl Default for InitialConfig {
    fn default() -> Self {
        Self {
            kind: InitialKind::GaussianXy,
            a: 1.0,
            b: 0.0,
            r0: 0.4,
        }
    }
}

/// Vertical probe segment for the log-coefficient fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProbeConfig {
    pub x1: f64,
    /// Defaults to `4h`.
    pub x2_min: Option<f64>,
    /// Defaults to `L/4`.
    pub x2_max: Option<f64>,
    pub count: usize,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            x1: 0.0,
            x2_min: None,
            x2_max: None,
            count: 8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IllposednessSection {
    /// Coefficients of the model datum; `initial.r0` sets its cutoff.
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "B")]
    pub b: f64,
    pub t_star: f64,
    pub x2_min: f64,
    pub x2_max: f64,
    pub probes: usize,
    /// The experiment runs on its own, finer grid.
    pub h: f64,
    pub margin: f64,
}

impl Default for IllposednessSection {
    fn default() -> Self {
        Self {
            a: 1.0,
            b: 1.0,
            t_star: 0.02,
            x2_min: 1.0 / 512.0,
            x2_max: 1.0 / 16.0,
            probes: 6,
            h: 1.0 / 1024.0,
            margin: 0.05,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LemmaConfig {
    pub beta: f64,
    pub p: f64,
    pub pair_samples: usize,
    pub random_fields: usize,
}

impl Default for LemmaConfig {
    fn default() -> Self {
        Self {
            beta: 0.5,
            p: 2.0,
            pair_samples: 10_000,
            random_fields: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub grid: GridConfig,
    pub kernel: KernelConfig,
    pub time: TimeConfig,
    pub initial: InitialConfig,
    pub probes: ProbeConfig,
    pub illposedness: IllposednessSection,
    pub lemma: LemmaConfig,
    /// Tracer start points `[x1, x2]` for `simulate`.
    pub tracers: Vec<[f64; 2]>,
    pub seed: u64,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            scenario: Scenario::Simulate,
            grid: GridConfig::default(),
            kernel: KernelConfig::default(),
            time: TimeConfig::default(),
            initial: InitialConfig::default(),
            probes: ProbeConfig::default(),
            illposedness: IllposednessSection::default(),
            lemma: LemmaConfig::default(),
            tracers: Vec::new(),
            seed: 42,
            out_dir: PathBuf::from("out"),
        }
    }
}

/// Every key path in `value` must exist in `schema`.
fn check_keys(value: &Value, schema: &Value, prefix: &str) -> Result<(), ConfigError> {
    if let (Value::Object(v), Value::Object(s)) = (value, schema) {
        for (k, child) in v {
            let path = if prefix.is_empty() {
                k.clone()
            } else {
                format!("{prefix}.{k}")
            };
            match s.get(k) {
                Some(sub) => check_keys(child, sub, &path)?,
                None => return Err(ConfigError::UnknownKey(path)),
            }
        }
    }
    Ok(())
}

/// An override value: JSON if it parses, otherwise a bare string.
fn override_value(raw: &str) -> Value {
    serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()))
}

fn set_path(root: &mut Value, path: &str, value: Value) -> Result<(), ConfigError> {
    let mut node = root;
    let parts: Vec<&str> = path.split('.').collect();
    for (n, part) in parts.iter().enumerate() {
        if part.is_empty() {
            return Err(ConfigError::UnknownKey(path.to_string()));
        }
        let obj = match node {
            Value::Object(m) => m,
            _ => return Err(ConfigError::UnknownKey(path.to_string())),
        };
        if n + 1 == parts.len() {
            obj.insert(part.to_string(), value);
            return Ok(());
        }
        node = obj
            .entry(part.to_string())
            .or_insert_with(|| Value::Object(Map::new()));
    }
    Ok(())
}

/// Parses `json` (empty text means defaults) and applies `overrides`, given
/// as `(section.key, value)` pairs, in order.
pub fn parse_config(json: &str, overrides: &[(String, String)]) -> Result<RunConfig, ConfigError> {
    let mut value: Value = if json.trim().is_empty() {
        Value::Object(Map::new())
    } else {
        serde_json::from_str(json).map_err(|e| ConfigError::Json(e.to_string()))?
    };
    if !value.is_object() {
        return Err(ConfigError::Json("top level must be an object".into()));
    }
    for (path, raw) in overrides {
        set_path(&mut value, path, override_value(raw))?;
    }
    let schema = serde_json::to_value(RunConfig::default()).expect("defaults serialise");
    check_keys(&value, &schema, "")?;
    let cfg: RunConfig = serde_json::from_value(value).map_err(|e| ConfigError::Invalid {
        key: "<config>".into(),
        reason: e.to_string(),
    })?;
    cfg.validate()?;
    Ok(cfg)
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        fn positive(key: &str, v: f64) -> Result<(), ConfigError> {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(ConfigError::Invalid {
                    key: key.into(),
                    reason: format!("{v} must be positive and finite"),
                })
            }
        }
        let invalid = |key: &str, reason: String| {
            Err(ConfigError::Invalid {
                key: key.into(),
                reason,
            })
        };
        positive("grid.h", self.grid.h)?;
        positive("grid.L", self.grid.support)?;
        positive("grid.margin", self.grid.margin)?;
        if self.grid.margin < 4.0 * self.grid.h {
            return invalid("grid.margin", format!("{} is below 4h", self.grid.margin));
        }
        positive("kernel.epsilon_over_h", self.kernel.epsilon_over_h)?;
        positive("time.cfl", self.time.cfl)?;
        if self.time.cfl > 1.0 {
            return invalid("time.cfl", format!("{} exceeds 1", self.time.cfl));
        }
        if !(self.time.t_end >= 0.0 && self.time.t_end.is_finite()) {
            return invalid("time.t_end", format!("{} must be >= 0", self.time.t_end));
        }
        positive("initial.r0", self.initial.r0)?;
        if !(self.initial.a.is_finite() && self.initial.b.is_finite()) {
            return invalid("initial", "coefficients must be finite".into());
        }
        if !(self.illposedness.a.is_finite() && self.illposedness.b.is_finite()) {
            return invalid("illposedness", "coefficients must be finite".into());
        }
        if self.initial.kind == InitialKind::Model && self.initial.r0 > self.grid.support {
            return invalid("initial.r0", format!("{} exceeds grid.L", self.initial.r0));
        }
        if let Some(v) = self.probes.x2_min {
            positive("probes.x2_min", v)?;
        }
        if let Some(v) = self.probes.x2_max {
            positive("probes.x2_max", v)?;
        }
        positive("illposedness.h", self.illposedness.h)?;
        positive("illposedness.margin", self.illposedness.margin)?;
        positive("illposedness.x2_min", self.illposedness.x2_min)?;
        positive("illposedness.x2_max", self.illposedness.x2_max)?;
        if !(self.illposedness.t_star >= 0.0) {
            return invalid("illposedness.t_star", "must be >= 0".into());
        }
        positive("lemma.beta", self.lemma.beta)?;
        if self.lemma.beta >= 1.0 {
            return invalid("lemma.beta", "must be below 1".into());
        }
        if !(self.lemma.p >= 1.0) {
            return invalid("lemma.p", "must be >= 1".into());
        }
        if self.lemma.pair_samples < 1000 {
            return invalid("lemma.pair_samples", "must be at least 1000".into());
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_source_gives_documented_defaults() {
        let c = parse_config("", &[]).unwrap();
        assert_eq!(c.grid.h, 1.0 / 128.0);
        assert_eq!(c.grid.support, 1.0);
        assert_eq!(c.grid.margin, 0.25);
        assert_eq!(c.kernel.epsilon_over_h, 2.0);
        assert_eq!(c.time.cfl, 0.5);
        assert_eq!(c.seed, 42);
        assert_eq!(c, RunConfig::default());
    }

    #[test]
    fn flags_override_file_values() {
        let c = parse_config(
            r#"{"initial": {"A": 1}}"#,
            &[("initial.A".into(), "2.5".into())],
        )
        .unwrap();
        assert_eq!(c.initial.a, 2.5);
    }

    #[test]
    fn unknown_keys_are_named() {
        assert_eq!(
            parse_config(r#"{"grid": {"hh": 1}}"#, &[]).unwrap_err(),
            ConfigError::UnknownKey("grid.hh".into())
        );
        assert_eq!(
            parse_config("", &[("time.foo".into(), "1".into())]).unwrap_err(),
            ConfigError::UnknownKey("time.foo".into())
        );
    }

    #[test]
    fn malformed_json_and_invalid_values() {
        assert!(matches!(parse_config("{", &[]), Err(ConfigError::Json(_))));
        assert!(matches!(
            parse_config(r#"{"time": {"cfl": 2}}"#, &[]),
            Err(ConfigError::Invalid { key, .. }) if key == "time.cfl"
        ));
    }

    #[test]
    fn effective_config_round_trips() {
        let c = parse_config(
            r#"{"scenario": "illposedness", "kernel": {"summation": "direct"}}"#,
            &[("initial.B".into(), "0.75".into()), ("probes.x2_min".into(), "0.05".into())],
        )
        .unwrap();
        let again = parse_config(&c.to_json(), &[]).unwrap();
        assert_eq!(again, c);
    }
}
