//! Acceptance suite: each preset scenario runs once, and every criterion
//! re-reads the measured values from the summaries against its own bands.

use std::path::PathBuf;
use std::sync::OnceLock;

use ens_core::scenario::{run_scenario, ScenarioConfig, Summary, PROFILE_BETAS, SCENARIOS};

static SUMMARIES: [OnceLock<Summary>; 6] = [const { OnceLock::new() }; 6];

fn summary(name: &str) -> &'static Summary {
    let k = SCENARIOS.iter().position(|s| *s == name).expect("known scenario");
    SUMMARIES[k].get_or_init(|| {
        let mut c = ScenarioConfig::preset(name).unwrap();
        c.output.directory = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance").join(name);
        run_scenario(&c).unwrap()
    })
}

fn value(s: &Summary, name: &str) -> f64 {
    s.check(name).unwrap_or_else(|| panic!("{}: missing check '{name}'", s.scenario)).value
}

struct Criterion {
    number: u8,
    title: &'static str,
    lines: Vec<String>,
    pass: bool,
}

impl Criterion {
    fn new(number: u8, title: &'static str) -> Self {
        Self { number, title, lines: Vec::new(), pass: true }
    }

    fn expect(&mut self, scenario: &Summary, name: &str, v: f64, band: &str, ok: bool) {
        self.pass &= ok;
        let mark = if ok { "ok" } else { "FAILED" };
        self.lines.push(format!("    [{mark}] {}: {name} = {v:e} ({band})", scenario.scenario));
    }

    fn at_most(&mut self, s: &Summary, name: &str, limit: f64) {
        let v = value(s, name);
        self.expect(s, name, v, &format!("<= {limit:e}"), v <= limit);
    }

    fn at_least(&mut self, s: &Summary, name: &str, limit: f64) {
        let v = value(s, name);
        self.expect(s, name, v, &format!(">= {limit}"), v >= limit);
    }

    fn no_error(&mut self, s: &Summary) {
        if let Some(e) = &s.error {
            self.pass = false;
            self.lines.push(format!("    [error] {}: {e}", s.scenario));
        }
    }

    fn finish(self) {
        let tag = if self.pass { "PASS" } else { "FAIL" };
        println!("{tag} criterion {:>2}: {}", self.number, self.title);
        for l in &self.lines {
            println!("{l}");
        }
        assert!(self.pass, "criterion {} failed", self.number);
    }
}

#[test]
fn criterion_01_operator_identities() {
    let s = summary("operator-suite");
    let mut c = Criterion::new(1, "operator identities on band-limited fields");
    c.no_error(s);
    for name in [
        "biot_savart curl_error",
        "biot_savart div_error",
        "grad_inverse div_error",
        "grad_inverse curl_error",
    ] {
        c.at_most(s, name, 1e-11);
    }
    c.finish();
}

#[test]
fn criterion_02_oseen_fixed_point() {
    let s = summary("oseen-fixed-point");
    let mut c = Criterion::new(2, "Oseen vortex tracked and time step order");
    c.no_error(s);
    c.at_most(s, "final_sup_relative_error", 1e-4);
    let ratio = value(s, "dt_halving");
    let fine = s.note("dt_halving fine_error").expect("fine error note");
    c.expect(s, "dt_halving", ratio, ">= 8 or fine error <= 1e-10", ratio >= 8.0 || fine <= 1e-10);
    c.at_least(s, "self_similar_pair_dt_halving", 8.0);
    c.finish();
}

#[test]
fn criterion_03_conservation() {
    let mut c = Criterion::new(3, "alpha and beta conserved on every run");
    for name in ["oseen-fixed-point", "theorem1-relaxation", "theorem2-perturbation", "entropy-monitor"] {
        let s = summary(name);
        c.no_error(s);
        let names: Vec<String> =
            s.checks.iter().filter(|k| k.name.ends_with("conservation")).map(|k| k.name.clone()).collect();
        c.expect(s, "conservation checks", names.len() as f64, ">= 1", !names.is_empty());
        for n in &names {
            c.at_most(s, n, 1e-8);
        }
    }
    c.finish();
}

#[test]
fn criterion_04_steady_profiles() {
    let s = summary("ws-profile");
    let mut c = Criterion::new(4, "steady profile family");
    c.no_error(s);
    c.at_most(s, "beta=0 equals_gaussian", 1e-10);
    for beta in PROFILE_BETAS {
        let tag = format!("beta={beta:.6}");
        c.at_most(s, &format!("{tag} unit_mass"), 1e-8);
        c.at_least(s, &format!("{tag} monotonicity_dichotomy"), 1.0);
        c.at_most(s, &format!("{tag} steady_residual"), 1e-5);
    }
    c.finish();
}

#[test]
fn criterion_05_divergence_decay() {
    let s = summary("theorem1-relaxation");
    let mut c = Criterion::new(5, "sup-norm divergence decay exponent");
    c.no_error(s);
    let v = value(s, "d_linf_exponent");
    c.expect(s, "d_linf_exponent", v, "-1.5 +/- 0.05", (v + 1.5).abs() <= 0.05);
    c.finish();
}

#[test]
fn criterion_06_relaxation_monitors() {
    let s = summary("theorem1-relaxation");
    let mut c = Criterion::new(6, "scaled distance to the vortex decreases");
    c.no_error(s);
    for p in ["p1", "p2", "pinf"] {
        let name = format!("th1_{p} max_step_ratio");
        let v = value(s, &name);
        c.expect(s, &name, v, "< 1", v < 1.0);
        c.at_most(s, &format!("th1_{p} final_over_initial"), 0.2);
    }
    c.finish();
}

#[test]
fn criterion_07_entropy() {
    let mut c = Criterion::new(7, "entropy monotone, production balance, radial cross term");
    let e = summary("entropy-monitor");
    c.no_error(e);
    c.at_most(e, "entropy_max_increase", 1e-10);
    c.at_most(e, "entropy_production_mismatch", 0.05);
    let radial: Vec<String> =
        e.checks.iter().filter(|k| k.name.ends_with("beta_cross_max")).map(|k| k.name.clone()).collect();
    c.expect(e, "radial companions", radial.len() as f64, ">= 1", !radial.is_empty());
    for n in &radial {
        c.at_most(e, n, 1e-8);
    }
    for name in ["oseen-fixed-point", "theorem1-relaxation"] {
        let s = summary(name);
        if s.check("entropy_max_increase").is_some() {
            c.at_most(s, "entropy_max_increase", 1e-10);
        }
    }
    c.finish();
}

#[test]
fn criterion_08_coercivity() {
    let s = summary("operator-suite");
    let mut c = Criterion::new(8, "coercivity on seeded fields and the first mode");
    c.no_error(s);
    let check = s.check("coercivity min_lhs_over_rhs").expect("coercivity check");
    c.expect(s, "coercivity min_lhs_over_rhs", check.value, ">= 1", check.value >= 1.0 && check.pass);
    let fields = s.notes.iter().filter(|n| n.name.starts_with("coercivity ")).count();
    c.expect(s, "fields tested", fields as f64, ">= 11", fields >= 11);
    c.finish();
}

#[test]
fn criterion_09_perturbation_decay() {
    let s = summary("theorem2-perturbation");
    let mut c = Criterion::new(9, "weighted perturbation decay rates");
    c.no_error(s);
    c.at_least(s, "wp_w_decay_rate", 0.25);
    c.at_least(s, "dp_w_decay_rate", 0.45);
    c.finish();
}

#[test]
fn criterion_10_profile_deviation_linear() {
    let s = summary("ws-profile");
    let mut c = Criterion::new(10, "profile deviation proportional to beta");
    c.no_error(s);
    let v = value(s, "ws_minus_g_linear_spread");
    c.expect(s, "ws_minus_g_linear_spread", v, "< 0.2", v < 0.2);
    c.finish();
}

#[test]
fn criterion_11_semigroup() {
    let s = summary("operator-suite");
    let mut c = Criterion::new(11, "linear semigroup");
    c.no_error(s);
    c.at_most(s, "semigroup fixes_gaussian", 1e-8);
    c.at_most(s, "semigroup first_mode_decay_mismatch", 0.02);
    c.at_most(s, "semigroup commutation", 1e-8);
    c.finish();
}

#[test]
fn oseen_preset_exits_zero() {
    let s = summary("oseen-fixed-point");
    assert!(s.check("final_sup_relative_error").unwrap().value <= 1e-4);
    assert_eq!(s.exit_code(), 0, "{}", s.to_toml_string());
}
