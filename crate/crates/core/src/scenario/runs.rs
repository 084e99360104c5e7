use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustfft::num_complex::Complex;

use crate::diagnostics::{
    coercivity_check, decay_fit, entropy_production_check, envelope_flagged, rows_to_csv, DecayModel,
    DiagnosticsRow,
};
use crate::error::Result;
use crate::evolution::{apply_L, evolve, semigroup_apply, StepControls, Trajectory};
use crate::fields::{gaussian, lpm_norm, mean_integral, oseen_vortex, SimState};
use crate::initial::{gaussian_noise, generate_ic};
use crate::profiles::{solve_ws_default, steady_residual, tilde_pair_with, ws_field, ws_max_location, ws_minus_g_norm};
use crate::spectral::{derivative, make_grid, Axis, GridSpec, ScalarField, Spectrum};
use crate::velocity::{biot_savart, grad_inverse};

use super::config::ScenarioConfig;
use super::summary::{Check, Note};

/// Headroom for round-off when asserting that a functional never increases.
pub const MONOTONE_SLACK: f64 = 1e-10;
pub const CONSERVATION_TOL: f64 = 1e-8;

/// Everything a scenario produced before it is written to disk.
#[derive(Debug, Default)]
pub struct Report {
    pub checks: Vec<Check>,
    pub notes: Vec<Note>,
    /// Main diagnostics table.
    pub diagnostics: Option<String>,
    /// Extra named text outputs (profile tables, companion runs).
    pub files: Vec<(String, String)>,
    pub trajectory: Option<Trajectory<f64>>,
    pub error: Option<String>,
}

impl Report {
    fn fail(&mut self, e: impl ToString) {
        let msg = e.to_string();
        self.error = Some(match self.error.take() {
            Some(prev) => format!("{prev}; {msg}"),
            None => msg,
        });
    }
}

fn grid_of(c: &ScenarioConfig) -> Result<Arc<GridSpec<f64>>> {
    make_grid(c.grid.n, c.grid.box_len)
}

pub fn controls_of(c: &ScenarioConfig) -> StepControls<f64> {
    StepControls {
        cfl_number: c.time.cfl,
        dt_max: c.time.dt_max,
        dealias: true,
        snapshot_every: c.output.snapshot_every,
        monitor_every: c.output.monitor_every,
        restart_rescale: c.time.restart_rescale,
    }
}

fn initial_state(c: &ScenarioConfig, grid: &Arc<GridSpec<f64>>) -> Result<SimState<f64>> {
    let (w, d) = generate_ic(&c.ic.generator, &c.ic_params(), c.ic.seed, grid)?;
    SimState::new(w, d, c.time.t0)
}

fn series(rows: &[DiagnosticsRow], f: impl Fn(&DiagnosticsRow) -> f64) -> Vec<f64> {
    rows.iter().map(f).collect()
}

/// Largest ratio of consecutive samples; below one iff strictly decreasing.
fn max_step_ratio(v: &[f64]) -> f64 {
    v.windows(2).map(|w| w[1] / w[0]).fold(f64::NEG_INFINITY, f64::max)
}

fn max_increase(v: &[f64]) -> f64 {
    v.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max)
}

fn conservation_check(label: &str, rows: &[DiagnosticsRow]) -> Check {
    let worst = rows.iter().map(|r| r.alpha_resid.max(r.beta_resid)).fold(0.0, f64::max);
    Check::at_most(3, format!("{label}conservation"), worst, CONSERVATION_TOL)
}

fn entropy_checks(label: &str, rows: &[DiagnosticsRow], checks: &mut Vec<Check>) {
    let h: Vec<f64> = rows.iter().filter_map(|r| r.entropy).collect();
    if h.len() < 2 || h.len() != rows.len() {
        checks.push(Check::holds(7, format!("{label}entropy_defined"), false));
        return;
    }
    let scale = h.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    checks.push(Check::at_most(7, format!("{label}entropy_max_increase"), max_increase(&h) / scale, MONOTONE_SLACK));
}

/// Runs `state` to `t1`, folding a failed run into the report.
fn run(report: &mut Report, state: &SimState<f64>, t1: f64, controls: &StepControls<f64>) -> Option<Trajectory<f64>> {
    match evolve(state, t1, controls) {
        Ok(mut traj) => {
            if let Some(e) = traj.failure.take() {
                report.fail(format!("run stopped at t = {}: {e}", traj.final_time() * traj.time_scale));
            }
            Some(traj)
        }
        Err(e) => {
            report.fail(e);
            None
        }
    }
}

pub fn ws_profile(c: &ScenarioConfig) -> Result<Report> {
    let grid = grid_of(c)?;
    let per_beta: Vec<Result<(f64, String, Vec<Check>, Vec<Note>)>> = c
        .sweep
        .betas
        .par_iter()
        .map(|&beta| {
            let p = solve_ws_default(beta)?;
            let tag = format!("beta={beta:.6}");
            let mut checks = Vec::new();
            let mass = mean_integral(&ws_field(&p, &grid)?);
            checks.push(Check::at_most(4, format!("{tag} unit_mass"), (mass - 1.0).abs(), 1e-8));
            let shape_ok = if beta <= 4.0 * PI {
                p.is_strictly_decreasing()
            } else {
                p.interior_maxima() == 1 && !p.is_strictly_decreasing()
            };
            checks.push(Check::holds(4, format!("{tag} monotonicity_dichotomy"), shape_ok));
            checks.push(Check::at_most(4, format!("{tag} steady_residual"), steady_residual(&p, &grid)?, 1e-5));
            if beta == 0.0 {
                let err = p
                    .radii()
                    .iter()
                    .zip(p.values())
                    .map(|(&r, &w)| (w - gaussian(r, 0.0)).abs())
                    .fold(0.0, f64::max);
                checks.push(Check::at_most(4, "beta=0 equals_gaussian", err, 1e-10));
            }
            let notes = vec![
                Note::new(format!("{tag} max_location"), ws_max_location(&p)),
                Note::new(format!("{tag} ws_at_origin"), p.values()[0]),
            ];
            Ok((beta, p.to_csv(), checks, notes))
        })
        .collect();
    let mut report = Report::default();
    for item in per_beta {
        let (beta, csv, checks, notes) = item?;
        report.files.push((format!("ws_beta_{beta:.4}.csv"), csv));
        report.checks.extend(checks);
        report.notes.extend(notes);
    }

    let small = [0.05, 0.1, 0.2, 0.4];
    let ratios: Vec<f64> = small.iter().map(|&b| ws_minus_g_norm(b).map(|v| v / b)).collect::<Result<_>>()?;
    let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ratios.iter().copied().fold(0.0, f64::max);
    report.checks.push(Check::below(10, "ws_minus_g_linear_spread", (hi - lo) / lo, 0.2));
    for (b, r) in small.iter().zip(&ratios) {
        report.notes.push(Note::new(format!("ws_minus_g_over_beta beta={b}"), *r));
    }
    report.notes.push(Note::new("ws_minus_g_over_beta beta=-0.2", ws_minus_g_norm(-0.2)? / 0.2));
    Ok(report)
}

fn sup_rel(a: &ScalarField<f64>, b: &ScalarField<f64>) -> Result<f64> {
    Ok(a.sub(b)?.max_abs() / b.max_abs())
}

pub fn oseen_fixed_point(c: &ScenarioConfig) -> Result<Report> {
    let grid = grid_of(c)?;
    let alpha = c.physics.alpha;
    let state = initial_state(c, &grid)?;
    let controls = controls_of(c);
    let mut report = Report::default();
    if let Some(traj) = run(&mut report, &state, c.time.t1, &controls) {
        let rows = &traj.rows;
        let final_state = traj.physical_final_state()?;
        let exact = oseen_vortex(alpha, final_state.t, final_state.grid())?;
        report.checks.push(Check::at_most(2, "final_sup_relative_error", sup_rel(&final_state.omega, &exact)?, 1e-4));
        let th1 = rows.iter().flat_map(|r| r.th1()).fold(0.0, f64::max);
        report.checks.push(Check::at_most(2, "theorem1_monitor_max", th1, 1e-4));
        report.checks.push(conservation_check("", rows));
        entropy_checks("", rows, &mut report.checks);
        report.notes.push(Note::new("restarts", traj.restarts as f64));
        report.notes.push(Note::new("steps", traj.steps as f64));
        report.diagnostics = Some(rows_to_csv(rows));
        report.trajectory = Some(traj);
    }

    let t_end = c.time.t0 + 1.0;
    let exact = oseen_vortex(alpha, t_end, &grid)?;
    let err_at = |dt: f64| -> Result<f64> {
        let fixed = StepControls {
            cfl_number: 1.0,
            dt_max: dt,
            restart_rescale: false,
            monitor_every: usize::MAX,
            snapshot_every: 0,
            ..controls
        };
        let traj = evolve(&state, t_end, &fixed)?.into_result()?;
        sup_rel(&traj.final_state.omega, &exact)
    };
    let (coarse, fine) = (err_at(0.1)?, err_at(0.05)?);
    let ratio = coarse / fine;
    report.checks.push(Check::custom(
        2,
        "dt_halving",
        ratio,
        ">= 8 or fine error <= 1e-10",
        ratio >= 8.0 || fine <= 1e-10,
    ));
    report.notes.push(Note::new("dt_halving coarse_error", coarse));
    report.notes.push(Note::new("dt_halving fine_error", fine));

    let profile = solve_ws_default(2.0 * PI)?;
    let bg_state = {
        let (w, d) = tilde_pair_with(&profile, 1.0, 1.0, &grid)?;
        SimState::new(w, d, 1.0)?
    };
    let (target, _) = tilde_pair_with(&profile, 1.0, 2.0, &grid)?;
    let pair_err = |steps: usize| -> Result<f64> {
        let fixed = StepControls {
            cfl_number: 1.0,
            dt_max: 1.0 / steps as f64,
            restart_rescale: false,
            monitor_every: usize::MAX,
            snapshot_every: 0,
            ..controls
        };
        let traj = evolve(&bg_state, 2.0, &fixed)?.into_result()?;
        sup_rel(&traj.final_state.omega, &target)
    };
    let errs = [pair_err(2)?, pair_err(4)?, pair_err(8)?];
    let order = (errs[0] / errs[1]).min(errs[1] / errs[2]);
    report.checks.push(Check::at_least(2, "self_similar_pair_dt_halving", order, 8.0));
    Ok(report)
}

pub fn theorem1_relaxation(c: &ScenarioConfig) -> Result<Report> {
    let grid = grid_of(c)?;
    let state = initial_state(c, &grid)?;
    let mut report = Report::default();
    let Some(traj) = run(&mut report, &state, c.time.t1, &controls_of(c)) else {
        return Ok(report);
    };
    let rows = &traj.rows;
    for (k, p) in ["p1", "p2", "pinf"].iter().enumerate() {
        let v = series(rows, |r| r.th1()[k]);
        report.checks.push(Check::custom(6, format!("th1_{p} max_step_ratio"), max_step_ratio(&v), "< 1", max_step_ratio(&v) < 1.0));
        let last = *v.last().expect("rows");
        report.checks.push(Check::at_most(6, format!("th1_{p} final_over_initial"), last / v[0], 0.2));
    }
    let t = series(rows, |r| r.t);
    let dinf = series(rows, |r| r.d_raw()[2]);
    match decay_fit(&t, &dinf, DecayModel::Power) {
        Ok(fit) => {
            report.checks.push(Check::within(5, "d_linf_exponent", fit.exponent, -1.5, 0.05));
            report.notes.push(Note::new("d_linf_r_squared", fit.r_squared));
        }
        Err(e) => report.fail(e),
    }
    let d2 = series(rows, |r| r.d_raw()[1]);
    if let Ok(fit) = decay_fit(&t, &d2, DecayModel::Power) {
        report.notes.push(Note::new("d_l2_exponent", fit.exponent));
    }
    report.checks.push(conservation_check("", rows));
    if c.physics.beta == 0.0 {
        entropy_checks("", rows, &mut report.checks);
    }
    report.notes.push(Note::new("envelope_flagged", envelope_flagged(rows) as u8 as f64));
    report.notes.push(Note::new("restarts", traj.restarts as f64));
    report.diagnostics = Some(rows_to_csv(rows));
    report.trajectory = Some(traj);
    Ok(report)
}

pub fn theorem2_perturbation(c: &ScenarioConfig) -> Result<Report> {
    let grid = grid_of(c)?;
    let state = initial_state(c, &grid)?;
    let mut report = Report::default();
    let Some(traj) = run(&mut report, &state, c.time.t1, &controls_of(c)) else {
        return Ok(report);
    };
    let rows = &traj.rows;
    report.checks.push(Check::within(0, "initial_wp_w", rows[0].wp_w, c.ic.noise_w, 0.01 * c.ic.noise_w));
    let tau = series(rows, |r| r.tau);
    for (name, limit, values) in [
        ("wp_w_decay_rate", 0.25, series(rows, |r| r.wp_w)),
        ("dp_w_decay_rate", 0.45, series(rows, |r| r.dp_w)),
    ] {
        match decay_fit(&tau, &values, DecayModel::Exponential) {
            Ok(fit) => {
                report.checks.push(Check::at_least(9, name, -fit.exponent, limit));
                report.notes.push(Note::new(format!("{name} r_squared"), fit.r_squared));
            }
            Err(e) => report.fail(e),
        }
    }
    report.checks.push(conservation_check("", rows));
    report.notes.push(Note::new("envelope_flagged", envelope_flagged(rows) as u8 as f64));
    report.notes.push(Note::new("restarts", traj.restarts as f64));
    report.diagnostics = Some(rows_to_csv(rows));
    report.trajectory = Some(traj);
    Ok(report)
}

pub fn entropy_monitor(c: &ScenarioConfig) -> Result<Report> {
    let grid = grid_of(c)?;
    let controls = controls_of(c);
    let mut configs = vec![(String::new(), c.clone())];
    for &beta in &c.sweep.betas {
        let mut radial = c.clone();
        radial.physics.beta = beta;
        radial.ic.generator = "gaussian-patches".into();
        radial.ic.centers = vec![[0.0, 0.0]];
        configs.push((format!("radial beta={beta} "), radial));
    }
    let runs: Vec<(String, Report)> = configs
        .into_par_iter()
        .map(|(label, cfg)| {
            let mut r = Report::default();
            match initial_state(&cfg, &grid) {
                Ok(s) => r.trajectory = run(&mut r, &s, cfg.time.t1, &controls),
                Err(e) => r.fail(e),
            }
            (label, r)
        })
        .collect();

    let mut report = Report::default();
    for (label, mut sub) in runs {
        if let Some(e) = sub.error.take() {
            report.fail(format!("{label}{e}"));
        }
        let Some(traj) = sub.trajectory.take() else { continue };
        let rows = &traj.rows;
        report.checks.push(conservation_check(&label, rows));
        if label.is_empty() {
            entropy_checks("", rows, &mut report.checks);
            match entropy_production_check(rows) {
                Some(v) => report.checks.push(Check::at_most(7, "entropy_production_mismatch", v, 0.05)),
                None => report.checks.push(Check::holds(7, "entropy_production_mismatch", false)),
            }
            report.diagnostics = Some(rows_to_csv(rows));
            report.trajectory = Some(traj);
        } else {
            let worst = rows.iter().map(|r| r.beta_cross.abs()).fold(0.0, f64::max);
            report.checks.push(Check::at_most(7, format!("{label}beta_cross_max"), worst, 1e-8));
            let name = label.trim().replace(' ', "_");
            report.files.push((format!("diagnostics_{name}.csv"), rows_to_csv(rows)));
        }
    }
    Ok(report)
}

/// Mean-zero real field with modes `0 < max(|m1|, |m2|) <= kmax`, sup norm one.
pub fn band_limited_field(grid: &Arc<GridSpec<f64>>, kmax: usize, seed: u64) -> ScalarField<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = grid.n();
    let mut s = Spectrum::zeros(grid);
    let k = kmax as i64;
    let index = |m: i64| if m >= 0 { m as usize } else { (n as i64 + m) as usize };
    for m2 in -k..=k {
        for m1 in -k..=k {
            if m1 == 0 && m2 == 0 {
                continue;
            }
            let c = Complex::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            s.coeffs_mut()[index(m2) * n + index(m1)] = c;
        }
    }
    let f = s.inverse();
    let peak = f.max_abs();
    f.scale(1.0 / peak)
}

pub fn operator_suite(c: &ScenarioConfig) -> Result<Report> {
    let grid = grid_of(c)?;
    let mut report = Report::default();
    let checks = &mut report.checks;

    let (mut bs_curl, mut bs_div, mut gi_div, mut gi_curl) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for k in 0..4 {
        let f = band_limited_field(&grid, 8, c.ic.seed + k);
        let u = biot_savart(&f)?;
        bs_curl = bs_curl.max(u.curl().sub(&f)?.max_abs());
        bs_div = bs_div.max(u.divergence().max_abs());
        let v = grad_inverse(&f)?;
        gi_div = gi_div.max(v.divergence().sub(&f)?.max_abs());
        gi_curl = gi_curl.max(v.curl().max_abs());
    }
    checks.push(Check::at_most(1, "biot_savart curl_error", bs_curl, 1e-11));
    checks.push(Check::at_most(1, "biot_savart div_error", bs_div, 1e-11));
    checks.push(Check::at_most(1, "grad_inverse div_error", gi_div, 1e-11));
    checks.push(Check::at_most(1, "grad_inverse curl_error", gi_curl, 1e-11));

    let g = ScalarField::from_fn(&grid, gaussian);
    let d1g = ScalarField::from_fn(&grid, |x1, x2| -x1 / 2.0 * gaussian(x1, x2));
    checks.push(Check::at_most(0, "L gaussian", apply_L(&g)?.max_abs(), 1e-8));
    checks.push(Check::at_most(0, "L first_mode", apply_L(&d1g)?.axpy(0.5, &d1g)?.max_abs(), 1e-8));
    let loc = ScalarField::from_fn(&grid, |x1, x2| gaussian(x1 - 1.0, x2 + 0.5) * (1.0 + x1 * x2));
    checks.push(Check::at_most(0, "L mean", mean_integral(&apply_L(&loc)?).abs(), 1e-10));

    let taus: Vec<f64> = (0..=15).map(|k| 0.1 * k as f64).collect();
    let (mut fix, mut mass, mut commute) = (0.0f64, 0.0f64, 0.0f64);
    let mut norms = Vec::with_capacity(taus.len());
    for &tau in &taus {
        let sg = semigroup_apply(&g, tau)?;
        fix = fix.max(sg.sub(&ScalarField::from_fn(sg.grid(), gaussian))?.max_abs());
        let sf = semigroup_apply(&d1g, tau)?;
        norms.push(lpm_norm(&sf, 2.0, 3.0)?);
        let sl = semigroup_apply(&loc, tau)?;
        mass = mass.max((mean_integral(&sl) - mean_integral(&loc)).abs());
        for axis in [Axis::X1, Axis::X2] {
            let lhs = derivative(&sl, axis);
            let rhs = semigroup_apply(&derivative(&loc, axis), tau)?.scale((tau / 2.0).exp());
            commute = commute.max(lhs.sub(&rhs.with_grid(lhs.grid())?)?.max_abs());
        }
    }
    checks.push(Check::at_most(11, "semigroup fixes_gaussian", fix, 1e-8));
    let mismatch = taus
        .iter()
        .zip(&norms)
        .map(|(&tau, &v)| (v / norms[0] * (tau / 2.0).exp() - 1.0).abs())
        .fold(0.0, f64::max);
    checks.push(Check::at_most(11, "semigroup first_mode_decay_mismatch", mismatch, 0.02));
    let fit = decay_fit(&taus, &norms, DecayModel::Exponential)?;
    report.notes.push(Note::new("semigroup first_mode_rate", -fit.exponent));
    checks.push(Check::at_most(11, "semigroup commutation", commute, 1e-8));
    checks.push(Check::at_most(11, "semigroup mass", mass, 1e-10));

    let (gamma, eps) = (0.45, 4e-5);
    let mut fields = vec![("first_mode".to_string(), d1g.clone())];
    for seed in 0..10u64 {
        fields.push((format!("seed={seed}"), gaussian_noise(&grid, 1.0, c.ic.seed + seed)?));
    }
    let mut worst = f64::INFINITY;
    let mut all = true;
    for (name, f) in &fields {
        let co = coercivity_check(f, gamma, eps)?;
        all &= co.holds();
        worst = worst.min(co.lhs / co.rhs);
        report.notes.push(Note::new(format!("coercivity {name} lhs_over_rhs"), co.lhs / co.rhs));
    }
    report.checks.push(Check::custom(8, "coercivity min_lhs_over_rhs", worst, ">= 1 on all fields", all));
    Ok(report)
}
