use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::error::{EnsError, Result};
use crate::initial::{IcParams, GENERATORS};

pub const SCENARIOS: [&str; 6] = [
    "ws-profile",
    "oseen-fixed-point",
    "theorem1-relaxation",
    "theorem2-perturbation",
    "entropy-monitor",
    "operator-suite",
];

/// The six steady-profile parameters exported by `ws-profile`.
pub const PROFILE_BETAS: [f64; 6] = [
    -2.0 * std::f64::consts::PI,
    0.0,
    2.0 * std::f64::consts::PI,
    4.0 * std::f64::consts::PI,
    8.0 * std::f64::consts::PI,
    16.0 * std::f64::consts::PI,
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n: usize,
    pub box_len: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    pub t0: f64,
    pub t1: f64,
    pub cfl: f64,
    pub dt_max: f64,
    pub restart_rescale: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicsConfig {
    pub alpha: f64,
    pub beta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IcConfig {
    pub generator: String,
    pub seed: u64,
    pub centers: Vec<[f64; 2]>,
    pub dipole: f64,
    pub noise_w: f64,
    pub noise_d: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub directory: PathBuf,
    /// Steps between field snapshots; 0 disables them.
    pub snapshot_every: usize,
    pub monitor_every: usize,
}

/// Extra parameter lists: the profile family for `ws-profile`, the radial
/// companion runs for `entropy-monitor`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub betas: Vec<f64>,
}

/// A complete run description. Every field has a per-scenario default, so a
/// file only needs `scenario = "..."` plus whatever it changes.
///
/// ```toml
/// scenario = "theorem1-relaxation"
///
/// [grid]
/// n = 256
/// box_len = 40.0
///
/// [time]
/// t1 = 100.0
///
/// [ic]
/// generator = "dipole-divergence"
/// centers = [[1.5, 0.0], [-1.5, 0.0]]
/// dipole = 1.0
/// ```
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: String,
    pub grid: GridConfig,
    pub time: TimeConfig,
    pub physics: PhysicsConfig,
    pub ic: IcConfig,
    pub output: OutputConfig,
    pub sweep: SweepConfig,
}

impl ScenarioConfig {
    /// Default configuration of a named scenario.
    pub fn preset(name: &str) -> Result<Self> {
        if !SCENARIOS.contains(&name) {
            return Err(unknown_scenario(name));
        }
        let mut c = Self {
            scenario: name.to_string(),
            grid: GridConfig { n: 256, box_len: 40.0 },
            time: TimeConfig { t0: 1.0, t1: 10.0, cfl: 0.4, dt_max: 0.05, restart_rescale: true },
            physics: PhysicsConfig { alpha: 1.0, beta: 0.0 },
            ic: IcConfig {
                generator: "gaussian-patches".into(),
                seed: 0,
                centers: vec![[0.0, 0.0]],
                dipole: 0.0,
                noise_w: 0.0,
                noise_d: 0.0,
            },
            output: OutputConfig { directory: PathBuf::from("out").join(name), snapshot_every: 0, monitor_every: 5 },
            sweep: SweepConfig { betas: Vec::new() },
        };
        match name {
            "ws-profile" => c.sweep.betas = PROFILE_BETAS.to_vec(),
            "theorem1-relaxation" => {
                c.time.t1 = 100.0;
                c.ic.generator = "dipole-divergence".into();
                c.ic.centers = vec![[1.5, 0.0], [-1.5, 0.0]];
                c.ic.dipole = 1.0;
                c.output.monitor_every = 2;
            }
            "theorem2-perturbation" => {
                c.grid.box_len = 48.0;
                c.time.t1 = 4.0f64.exp();
                c.physics.beta = 0.1;
                c.ic.generator = "tilde-plus-noise".into();
                c.ic.seed = 7;
                c.ic.noise_w = 1e-2;
                c.ic.noise_d = 1e-2;
                c.output.monitor_every = 2;
            }
            "entropy-monitor" => {
                c.time.t1 = 1.0f64.exp();
                c.time.dt_max = 0.01;
                c.ic.centers = vec![[1.0, 0.5], [-1.0, -0.5]];
                c.output.monitor_every = 1;
                c.sweep.betas = vec![0.5];
            }
            _ => {}
        }
        Ok(c)
    }

    /// Parses a configuration file body, layering it over the preset of
    /// the scenario it names, then applies `--key.subkey value` overrides.
    pub fn from_toml_str(text: &str, overrides: &[(String, String)]) -> Result<Self> {
        let file: Table = text.parse().map_err(|e: toml::de::Error| EnsError::Config(e.to_string()))?;
        let mut name = file.get("scenario").and_then(Value::as_str).map(str::to_string);
        for (k, v) in overrides {
            if k == "scenario" {
                name = Some(v.clone());
            }
        }
        let name = name.ok_or_else(|| EnsError::Config("missing `scenario` name".into()))?;
        let mut merged = Value::try_from(Self::preset(&name)?).map_err(|e| EnsError::Config(e.to_string()))?;
        merge(&mut merged, Value::Table(file));
        for (k, v) in overrides {
            set_path(&mut merged, k, v)?;
        }
        let config: Self = merged.try_into().map_err(|e: toml::de::Error| EnsError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_file(path: &Path, overrides: &[(String, String)]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| EnsError::io(path, e))?;
        Self::from_toml_str(&text, overrides)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// This configuration with one more override applied.
    pub fn with_override(&self, key: &str, value: &str) -> Result<Self> {
        let mut v = Value::try_from(self).map_err(|e| EnsError::Config(e.to_string()))?;
        set_path(&mut v, key, value)?;
        let config: Self = v.try_into().map_err(|e: toml::de::Error| EnsError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(EnsError::Config(m));
        if !SCENARIOS.contains(&self.scenario.as_str()) {
            return Err(unknown_scenario(&self.scenario));
        }
        if !GENERATORS.contains(&self.ic.generator.as_str()) {
            return bad(format!(
                "unknown generator '{}' (expected one of {})",
                self.ic.generator,
                GENERATORS.join(", ")
            ));
        }
        if self.grid.n < 16 || self.grid.n % 2 != 0 {
            return bad(format!("grid.n must be even and >= 16, got {}", self.grid.n));
        }
        if !(self.grid.box_len > 0.0) || !self.grid.box_len.is_finite() {
            return bad(format!("grid.box_len must be > 0, got {}", self.grid.box_len));
        }
        let t = &self.time;
        if !(t.t0 > 0.0 && t.t1 > t.t0 && t.t1.is_finite()) {
            return bad(format!("need t1 > t0 > 0, got t0 = {}, t1 = {}", t.t0, t.t1));
        }
        if !(t.cfl > 0.0 && t.cfl <= 1.0) {
            return bad(format!("time.cfl must lie in (0, 1], got {}", t.cfl));
        }
        if !(t.dt_max > 0.0) || !t.dt_max.is_finite() {
            return bad(format!("time.dt_max must be > 0, got {}", t.dt_max));
        }
        if self.output.monitor_every == 0 {
            return bad("output.monitor_every must be >= 1".into());
        }
        if !self.physics.alpha.is_finite() || !self.physics.beta.is_finite() {
            return bad("physics parameters must be finite".into());
        }
        if self.sweep.betas.iter().any(|b| !b.is_finite()) {
            return bad("sweep.betas must be finite".into());
        }
        Ok(())
    }

    pub fn ic_params(&self) -> IcParams {
        IcParams {
            alpha: self.physics.alpha,
            beta: self.physics.beta,
            t0: self.time.t0,
            centers: self.ic.centers.clone(),
            dipole: self.ic.dipole,
            noise_w: self.ic.noise_w,
            noise_d: self.ic.noise_d,
        }
    }
}

fn unknown_scenario(name: &str) -> EnsError {
    EnsError::Config(format!("unknown scenario '{name}' (expected one of {})", SCENARIOS.join(", ")))
}

fn merge(base: &mut Value, top: Value) {
    match (base, top) {
        (Value::Table(b), Value::Table(t)) => {
            for (k, v) in t {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

/// Reads an override value as a TOML literal, falling back to a bare string.
pub fn parse_value(raw: &str) -> Value {
    format!("v = {raw}")
        .parse::<Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()))
}

fn set_path(root: &mut Value, key: &str, raw: &str) -> Result<()> {
    let mut node = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let table = node
            .as_table_mut()
            .ok_or_else(|| EnsError::Config(format!("`{key}`: `{part}` is not inside a table")))?;
        if !table.contains_key(*part) {
            return Err(EnsError::Config(format!("unknown configuration key `{key}`")));
        }
        if i + 1 == parts.len() {
            let slot = table.get_mut(*part).expect("checked above");
            let mut value = parse_value(raw);
            if slot.is_float() {
                if let Some(i) = value.as_integer() {
                    value = Value::Float(i as f64);
                }
            }
            if slot.is_str() && !value.is_str() {
                value = Value::String(raw.to_string());
            }
            *slot = value;
            return Ok(());
        }
        node = table.get_mut(*part).expect("checked above");
    }
    Err(EnsError::Config(format!("empty configuration key `{key}`")))
}

/// Splits `--key.subkey value` and `--key.subkey=value` arguments.
pub fn parse_overrides(args: &[String]) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    let mut it = args.iter();
    while let Some(a) = it.next() {
        let Some(key) = a.strip_prefix("--") else {
            return Err(EnsError::Config(format!("expected `--key value`, got `{a}`")));
        };
        match key.split_once('=') {
            Some((k, v)) => out.push((k.to_string(), v.to_string())),
            None => {
                let v = it.next().ok_or_else(|| EnsError::Config(format!("`--{key}` needs a value")))?;
                out.push((key.to_string(), v.clone()));
            }
        }
    }
    Ok(out)
}

/// Parses `physics.beta=0.1,0.2,0.4` into the key and its values.
pub fn parse_vary(spec: &str) -> Result<(String, Vec<String>)> {
    let (k, vs) = spec
        .split_once('=')
        .ok_or_else(|| EnsError::Config(format!("expected `key=v1,v2,...`, got `{spec}`")))?;
    let values: Vec<String> = vs.split(',').map(|v| v.trim().to_string()).filter(|v| !v.is_empty()).collect();
    if values.is_empty() {
        return Err(EnsError::Config(format!("`{k}` has no values to vary")));
    }
    Ok((k.trim().to_string(), values))
}
