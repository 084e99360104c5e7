use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{EnsError, Result};

/// One measured quantity against its acceptance band.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    /// Acceptance criterion the check feeds (0 when it feeds none).
    pub criterion: u8,
    pub value: f64,
    pub band: String,
    pub pass: bool,
}

impl Check {
    pub fn at_most(criterion: u8, name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self { name: name.into(), criterion, value, band: format!("<= {limit:e}"), pass: value <= limit }
    }

    pub fn below(criterion: u8, name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self { name: name.into(), criterion, value, band: format!("< {limit:e}"), pass: value < limit }
    }

    pub fn at_least(criterion: u8, name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self { name: name.into(), criterion, value, band: format!(">= {limit}"), pass: value >= limit }
    }

    pub fn within(criterion: u8, name: impl Into<String>, value: f64, target: f64, tol: f64) -> Self {
        Self {
            name: name.into(),
            criterion,
            value,
            band: format!("{target} +/- {tol}"),
            pass: (value - target).abs() <= tol,
        }
    }

    /// A yes/no property; `value` is 1 when it holds.
    pub fn holds(criterion: u8, name: impl Into<String>, ok: bool) -> Self {
        Self { name: name.into(), criterion, value: if ok { 1.0 } else { 0.0 }, band: "true".into(), pass: ok }
    }

    /// Arbitrary band with an explicit verdict.
    pub fn custom(criterion: u8, name: impl Into<String>, value: f64, band: impl Into<String>, pass: bool) -> Self {
        Self { name: name.into(), criterion, value, band: band.into(), pass }
    }
}

/// A reported quantity with no acceptance band (fitted constants, flags).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Note {
    pub name: String,
    pub value: f64,
}

impl Note {
    pub fn new(name: impl Into<String>, value: f64) -> Self {
        Self { name: name.into(), value }
    }
}

/// Outcome of one scenario, written as `summary.toml`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub scenario: String,
    pub passed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, rename = "check")]
    pub checks: Vec<Check>,
    #[serde(default, rename = "note")]
    pub notes: Vec<Note>,
}

impl Summary {
    pub fn new(scenario: &str, checks: Vec<Check>, notes: Vec<Note>, error: Option<String>) -> Self {
        let passed = error.is_none() && checks.iter().all(|c| c.pass);
        Self { scenario: scenario.to_string(), passed, error, checks, notes }
    }

    pub fn exit_code(&self) -> i32 {
        if self.passed {
            0
        } else {
            1
        }
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn note(&self, name: &str) -> Option<f64> {
        self.notes.iter().find(|n| n.name == name).map(|n| n.value)
    }

    pub fn for_criterion(&self, criterion: u8) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(move |c| c.criterion == criterion)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("summary serializes")
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_toml_string()).map_err(|e| EnsError::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| EnsError::io(path, e))?;
        toml::from_str(&text).map_err(|e| EnsError::Format { path: path.to_path_buf(), reason: e.to_string() })
    }
}
