//! The acceptance suite: every scenario at its preset, checks grouped by
//! criterion into one verdict line each.

use std::fmt;
use std::path::Path;

use crate::error::Result;
use crate::scenario::{run_scenario, Check, ScenarioConfig, Summary, SCENARIOS};

pub const CRITERIA: [(u8, &str); 11] = [
    (1, "operator identities"),
    (2, "oseen fixed point"),
    (3, "conservation"),
    (4, "steady profile suite"),
    (5, "divergence decay rate"),
    (6, "relaxation monitors"),
    (7, "entropy"),
    (8, "coercivity"),
    (9, "perturbation decay rates"),
    (10, "profile deviation linear in beta"),
    (11, "semigroup"),
];

#[derive(Clone, Debug, PartialEq)]
pub struct Verdict {
    pub criterion: u8,
    pub title: &'static str,
    pub pass: bool,
    /// Contributing checks, tagged with the scenario that produced them.
    pub checks: Vec<(String, Check)>,
    /// Scenario errors that invalidate this criterion.
    pub errors: Vec<String>,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.pass { "PASS" } else { "FAIL" };
        write!(f, "{tag} criterion {:>2} {}", self.criterion, self.title)?;
        for (scenario, c) in &self.checks {
            let mark = if c.pass { "ok" } else { "FAILED" };
            write!(f, "\n    [{mark}] {scenario}: {} = {:e} ({})", c.name, c.value, c.band)?;
        }
        for e in &self.errors {
            write!(f, "\n    [error] {e}")?;
        }
        Ok(())
    }
}

/// Criteria a preset scenario contributes to.
pub fn feeds(scenario: &str) -> &'static [u8] {
    match scenario {
        "ws-profile" => &[4, 10],
        "oseen-fixed-point" => &[2, 3, 7],
        "theorem1-relaxation" => &[3, 5, 6, 7],
        "theorem2-perturbation" => &[3, 9],
        "entropy-monitor" => &[3, 7],
        "operator-suite" => &[1, 8, 11],
        _ => &[],
    }
}

/// Groups the checks of several summaries by criterion. A criterion with
/// no checks fails, as does one fed by a scenario that reported an error.
pub fn verdicts(summaries: &[Summary]) -> Vec<Verdict> {
    CRITERIA
        .iter()
        .map(|&(criterion, title)| {
            let mut checks = Vec::new();
            let mut errors = Vec::new();
            for s in summaries {
                if let Some(e) = &s.error {
                    if feeds(&s.scenario).contains(&criterion) {
                        errors.push(format!("{}: {e}", s.scenario));
                    }
                }
                checks.extend(s.for_criterion(criterion).map(|c| (s.scenario.clone(), c.clone())));
            }
            let pass = !checks.is_empty() && errors.is_empty() && checks.iter().all(|(_, c)| c.pass);
            Verdict { criterion, title, pass, checks, errors }
        })
        .collect()
}

/// Runs all preset scenarios into `workdir/<scenario>`.
pub fn run_all(workdir: &Path) -> Result<Vec<Summary>> {
    SCENARIOS
        .iter()
        .map(|name| {
            let mut c = ScenarioConfig::preset(name)?;
            c.output.directory = workdir.join(name);
            run_scenario(&c)
        })
        .collect()
}
