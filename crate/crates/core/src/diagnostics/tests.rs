use super::*;
use crate::fields::{gaussian_g, mean_integral};
use crate::initial::gaussian_noise;
use crate::profiles::{solve_ws_default, tilde_pair_with, ws_field};
use crate::spectral::{make_grid, GridSpec};
use std::f64::consts::PI;
use std::sync::Arc;

fn grid() -> Arc<GridSpec<f64>> {
    make_grid(256, 40.0).unwrap()
}

fn d1g(g: &Arc<GridSpec<f64>>) -> ScalarField<f64> {
    ScalarField::from_fn(g, |x1, x2| -x1 / 2.0 * gaussian(x1, x2))
}

#[test]
fn entropy_of_multiples_of_g() {
    let g = grid();
    let gg = gaussian_g(&g);
    assert!(relative_entropy(&gg, &gg).unwrap().abs() < 1e-15);
    let h2 = relative_entropy(&gg.scale(2.0), &gg).unwrap();
    assert!((h2 - 2.0 * 2f64.ln()).abs() < 1e-8);
    assert!((h2 - 1.386_294).abs() < 1e-6);
    let h3 = relative_entropy(&gg.scale(3.0), &gg).unwrap();
    assert!((h3 - 3.2958).abs() < 1e-4);
}

#[test]
fn fisher_examples() {
    let g = grid();
    let gg = gaussian_g(&g);
    assert!(fisher_information(&gg, &gg).unwrap().abs() < 1e-12);
    assert!(fisher_information(&gg.scale(5.0), &gg).unwrap().abs() < 1e-11);
    let shifted = ScalarField::from_fn(&g, |x1, x2| gaussian(x1 - 1.0, x2));
    let i = fisher_information(&shifted, &gg).unwrap();
    assert!((i - 0.25).abs() <= 1e-6, "{i}");
    let h = relative_entropy(&shifted, &gg).unwrap();
    assert!((h - 0.25).abs() <= 1e-6, "{h}");
}

#[test]
fn entropy_rejects_negative_vorticity() {
    let g = grid();
    let gg = gaussian_g(&g);
    let bad = gg.sub(&d1g(&g).scale(2.0)).unwrap();
    assert!(matches!(relative_entropy(&bad, &gg), Err(EnsError::NegativeVorticity { .. })));
    assert!(matches!(fisher_information(&bad, &gg), Err(EnsError::NegativeVorticity { .. })));
}

fn row(tau: f64, h: Option<f64>, i: Option<f64>) -> DiagnosticsRow {
    DiagnosticsRow {
        t: tau.exp(),
        tau,
        alpha_resid: 0.0,
        beta_resid: 0.0,
        l1: 0.0,
        l2: 0.0,
        linf: 0.0,
        th1_p1: 0.0,
        th1_p2: 0.0,
        th1_pinf: 0.0,
        d_p1: 0.0,
        d_p2: 0.0,
        d_pinf: 0.0,
        wp_w: 0.0,
        dp_w: 0.0,
        entropy: h,
        fisher: i,
        beta_cross: 0.0,
        envelope_ratio: 1.0,
    }
}

#[test]
fn entropy_production_residual() {
    let stationary: Vec<_> = (0..10).map(|k| row(0.1 * k as f64, Some(0.0), Some(0.0))).collect();
    assert_eq!(entropy_production_check(&stationary), Some(0.0));
    // H = e^{-tau}/4 with I = -dH/dtau, on a nonuniform mesh
    let taus = [0.0, 0.01, 0.025, 0.03, 0.05, 0.08, 0.1];
    let rows: Vec<_> = taus.iter().map(|&t| row(t, Some((-t).exp() / 4.0), Some((-t).exp() / 4.0))).collect();
    assert!(entropy_production_check(&rows).unwrap() < 1e-4);
    assert_eq!(entropy_production_check(&rows[..2]), None);
    let gaps: Vec<_> = (0..5).map(|k| row(k as f64, None, None)).collect();
    assert_eq!(entropy_production_check(&gaps), None);
}

#[test]
fn beta_cross_vanishes_on_radial_and_symmetric_states() {
    let g = grid();
    let beta = 2.0 * PI;
    let ws = ws_field(&solve_ws_default(beta).unwrap(), &g).unwrap();
    assert_eq!(beta_cross_term(&ws, &ws, beta).unwrap(), 0.0);
    let radial = ScalarField::from_fn(&g, |x1, x2| {
        let r2 = x1 * x1 + x2 * x2;
        (1.0 + (r2 - 4.0) / 20.0) * gaussian(x1, x2)
    });
    let wr = radial.scale(1.0 / mean_integral(&radial));
    assert!(beta_cross_term(&wr, &ws, beta).unwrap().abs() <= 1e-8);
    let sym = ws.axpy(0.01, &d1g(&g)).unwrap();
    assert!(beta_cross_term(&sym, &ws, beta).unwrap().abs() <= 1e-12);
}

// Direct O(n^4) Biot-Savart sum on a coarse grid, self-interaction skipped.
fn direct_cross(p: &ScalarField<f64>, beta: f64) -> f64 {
    let g = p.grid();
    let n = g.n();
    let h2 = g.cell_area();
    let vals = p.values();
    let mut acc = 0.0;
    for a in 0..n * n {
        let (x1, x2) = g.position(a);
        if vals[a].abs() < 1e-14 {
            continue;
        }
        let (mut u1, mut u2) = (0.0, 0.0);
        for b in 0..n * n {
            if a == b {
                continue;
            }
            let (y1, y2) = g.position(b);
            let (z1, z2) = (x1 - y1, x2 - y2);
            let s = 2.0 * PI * (z1 * z1 + z2 * z2);
            u1 += -z2 / s * vals[b] * h2;
            u2 += z1 / s * vals[b] * h2;
        }
        let r2 = x1 * x1 + x2 * x2;
        let k = one_minus_exp_over(r2 / 4.0) / (8.0 * PI);
        acc += vals[a] * k * (u1 * x1 + u2 * x2) * h2;
    }
    beta * acc
}

#[test]
fn beta_cross_matches_direct_quadrature() {
    let beta = 2.0 * PI;
    let pert = |x1: f64, x2: f64| {
        0.1 * (gaussian(x1 - 1.0, x2 - 0.5) - gaussian(x1, x2)) * (1.0 + 0.5 * x1)
    };
    let spectral = {
        let g = make_grid(128, 32.0).unwrap();
        let ws = ws_field(&solve_ws_default(beta).unwrap(), &g).unwrap();
        let p = ScalarField::from_fn(&g, pert);
        let p = p.axpy(-mean_integral(&p), &gaussian_g(&g)).unwrap();
        beta_cross_term(&ws.add(&p).unwrap(), &ws, beta).unwrap()
    };
    let direct = {
        let g = make_grid(64, 16.0).unwrap();
        let p = ScalarField::from_fn(&g, pert);
        let p = p.axpy(-mean_integral(&p), &gaussian_g(&g)).unwrap();
        direct_cross(&p, beta)
    };
    assert!(spectral.abs() > 1e-7, "{spectral}");
    assert!(((spectral - direct) / direct).abs() < 0.05, "spectral {spectral} direct {direct}");
}

#[test]
fn coercivity_on_eigenmode() {
    let g = grid();
    let f = d1g(&g);
    let c = coercivity_check(&f, 0.45, 4e-5).unwrap();
    let norm2 = weighted_w_norm(&f).unwrap().powi(2);
    assert!((norm2 - 0.5).abs() < 1e-8);
    assert!((c.lhs - 0.5 * norm2).abs() < 1e-8);
    assert!(c.holds() && c.rhs < c.lhs, "{c:?}");
    let z = ScalarField::zeros(&g);
    assert_eq!(coercivity_check(&z, 0.45, 4e-5).unwrap(), Coercivity { lhs: 0.0, rhs: 0.0 });
}

#[test]
fn coercivity_on_random_fields() {
    let g = grid();
    for seed in 0..10 {
        let f = gaussian_noise(&g, 1.0, seed).unwrap();
        let c = coercivity_check(&f, 0.45, 4e-5).unwrap();
        assert!(c.holds(), "seed {seed}: {c:?}");
    }
}

#[test]
fn coercivity_preconditions() {
    let g = grid();
    assert!(matches!(coercivity_check(&gaussian_g(&g), 0.45, 4e-5), Err(EnsError::NonZeroMean { .. })));
    assert!(coercivity_check(&d1g(&g), 0.45, 1e-4).is_err());
}

#[test]
fn decay_fit_is_exact_on_models() {
    let ts: Vec<f64> = (0..12).map(|k| 1.0 + k as f64 * 0.7).collect();
    let vs: Vec<f64> = ts.iter().map(|t| 5.0 * t.powf(-1.5)).collect();
    let f = decay_fit(&ts, &vs, DecayModel::Power).unwrap();
    assert!((f.exponent + 1.5).abs() < 1e-12 && (f.r_squared - 1.0).abs() < 1e-12);
    assert!((f.intercept - 5f64.ln()).abs() < 1e-12);
    let taus: Vec<f64> = (0..9).map(|k| k as f64 * 0.5).collect();
    let vs: Vec<f64> = taus.iter().map(|t| (-0.5 * t).exp()).collect();
    let f = decay_fit(&taus, &vs, DecayModel::Exponential).unwrap();
    assert!((f.exponent + 0.5).abs() < 1e-12 && (f.r_squared - 1.0).abs() < 1e-12);
    assert!(decay_fit(&taus[..7], &vs[..7], DecayModel::Exponential).is_err());
    let mut bad = vs.clone();
    bad[3] = 0.0;
    assert!(decay_fit(&taus, &bad, DecayModel::Exponential).is_err());
}

#[test]
fn monitors_vanish_on_tilde_pair_and_see_perturbations() {
    let g = grid();
    let beta = 0.1;
    let profile = Arc::new(solve_ws_default(beta).unwrap());
    let bg = Background::new(1.0, profile.clone());
    let (w, d) = tilde_pair_with(&profile, 1.0, 1.0, &g).unwrap();
    let s = SimState::new(w.clone(), d.clone(), 1.0).unwrap();
    let m = theorem_monitors(&s, &bg, 1.0).unwrap();
    assert!(m.l.iter().chain(&m.th1).chain(&m.d).all(|&v| v == 0.0));
    assert_eq!((m.wp_w, m.dp_w), (0.0, 0.0));

    let p = d1g(&g);
    let s = SimState::new(w.axpy(0.01, &p).unwrap(), d, 1.0).unwrap();
    let m = theorem_monitors(&s, &bg, 1.0).unwrap();
    let want = 0.01 * weighted_w_norm(&p).unwrap();
    assert!((m.wp_w / want - 1.0).abs() < 1e-6, "{} vs {want}", m.wp_w);
}

#[test]
fn monitors_are_invariant_under_restart_units() {
    let g = grid();
    let bg = Background::new(1.0, Arc::new(solve_ws_default(0.0).unwrap()));
    let w = ScalarField::from_fn(&g, |x1, x2| {
        0.5 * crate::fields::heat_kernel(x1 - 1.0, x2, 4.0) + 0.5 * crate::fields::heat_kernel(x1 + 1.0, x2, 4.0)
    });
    let dd = ScalarField::from_fn(&g, |x1, x2| -x1 / 8.0 * crate::fields::heat_kernel(x1, x2, 4.0));
    let s = SimState::new(w, dd, 4.0).unwrap();
    let r = crate::evolution::rescale_by_two(&s).unwrap();
    let a = theorem_monitors(&s, &bg, 1.0).unwrap();
    let b = theorem_monitors(&r, &bg, 4.0).unwrap();
    for k in 0..3 {
        let tol = if k == 0 { 1e-3 } else { 1e-9 };
        assert!((a.th1[k] / b.th1[k] - 1.0).abs() < tol);
        assert!((a.d[k] / b.d[k] - 1.0).abs() < tol);
        assert!((a.l[k] / b.l[k] - 1.0).abs() < tol);
    }
    assert!((a.wp_w / b.wp_w - 1.0).abs() < 1e-9);
}

#[test]
fn csv_rows_have_fixed_schema() {
    let r = row(0.5, None, Some(0.1));
    let line = r.to_csv_line();
    assert_eq!(line.split(',').count(), CSV_COLUMNS.len());
    assert_eq!(line.split(',').nth(15), Some(""));
    let csv = rows_to_csv(&[r.clone(), r]);
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("# ens diagnostics schema v1"));
    assert_eq!(lines.next().unwrap(), CSV_COLUMNS.join(","));
    assert_eq!(lines.count(), 2);
}

#[test]
fn envelope_flag_logic() {
    let mut rows: Vec<_> = (0..30).map(|k| row(0.1 * k as f64, None, None)).collect();
    assert!(!envelope_flagged(&rows));
    rows[25].envelope_ratio = 2.5;
    assert!(envelope_flagged(&rows));
    rows[25].envelope_ratio = 1.0;
    rows[3].envelope_ratio = 5.0;
    assert!(!envelope_flagged(&rows));
}

#[test]
fn envelope_of_gaussian() {
    let g = grid();
    let a = gaussian_envelope(&gaussian_g(&g));
    assert!((a - 1.0 / (4.0 * PI)).abs() < 1e-15);
}
