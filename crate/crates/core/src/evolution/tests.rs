use super::*;
use crate::diagnostics::{decay_fit, DecayModel};
use crate::fields::{gaussian, heat_kernel, lp_norm, mean_integral, oseen_vortex, to_self_similar};
use crate::profiles::tilde_pair_with;
use crate::spectral::make_grid;
use std::f64::consts::PI;

fn grid() -> Arc<GridSpec<f64>> {
    make_grid(256, 40.0).unwrap()
}

fn d1g(x1: f64, x2: f64) -> f64 {
    -x1 / 2.0 * gaussian(x1, x2)
}

fn sup_rel(a: &ScalarField<f64>, b: &ScalarField<f64>) -> f64 {
    a.sub(b).unwrap().max_abs() / b.max_abs()
}

#[test]
fn heat_flow_of_gaussian_is_closed_form() {
    let g = grid();
    let d = ScalarField::from_fn(&g, gaussian);
    for &s in &[0.0, 0.5, 3.0] {
        let out = heat_evolve_exact(&d, s).unwrap();
        let exact = ScalarField::from_fn(&g, |x1, x2| heat_kernel(x1, x2, 1.0 + s));
        assert!(out.sub(&exact).unwrap().max_abs() <= 1e-11, "s={s}");
    }
    assert_eq!(heat_evolve_exact(&d, 0.0).unwrap().values(), d.values());
    assert!(heat_evolve_exact(&d, -1.0).is_err());
}

#[test]
fn heat_flow_dipole_decays_at_half_rate_in_similarity_variables() {
    let g = grid();
    let d0 = ScalarField::from_fn(&g, d1g);
    let (mut taus, mut norms) = (Vec::new(), Vec::new());
    for k in 0..=10 {
        let tau = 0.2 * k as f64;
        let t = tau.exp();
        let d = heat_evolve_exact(&d0, t - 1.0).unwrap();
        let s = SimState::new(ScalarField::zeros(&g), d, t).unwrap();
        let dd = to_self_similar(&s).unwrap().d();
        taus.push(tau);
        norms.push(lp_norm(&dd, 2.0).unwrap());
    }
    let fit = decay_fit(&taus, &norms, DecayModel::Exponential).unwrap();
    assert!((fit.exponent + 0.5).abs() <= 0.02, "{fit:?}");
}

fn oseen_background(alpha: f64) -> Background<f64> {
    Background::new(alpha, Arc::new(solve_ws_default(0.0).unwrap()))
}

#[test]
fn rhs_vanishes_on_radial_vorticity() {
    let g = grid();
    let bg = oseen_background(1.0);
    let w = oseen_vortex(1.0, 1.0, &g).unwrap();
    let z = ScalarField::zeros(&g);
    let rhs = rhs_vorticity(&w, &z, 1.0, &bg, true).unwrap();
    assert!(rhs.max_abs() <= 1e-9, "{}", rhs.max_abs());

    let bg0 = oseen_background(0.0);
    assert_eq!(rhs_vorticity(&z, &z, 1.0, &bg0, true).unwrap().max_abs(), 0.0);
}

#[test]
fn rhs_has_no_mean() {
    let g = grid();
    let bg = Background::new(1.0, Arc::new(solve_ws_default(0.5).unwrap()));
    let w = ScalarField::from_fn(&g, |x1, x2| 0.5 * gaussian(x1 - 1.5, x2) + 0.5 * gaussian(x1 + 1.5, x2 + 0.4));
    let d = ScalarField::from_fn(&g, |x1, x2| 0.5 * gaussian(x1, x2) + d1g(x1, x2 - 0.3));
    let rhs = rhs_vorticity(&w, &d, 1.0, &bg, true).unwrap();
    assert!(mean_integral(&rhs).abs() <= 1e-13);
    assert!(rhs.max_abs() > 1e-4);
}

#[test]
fn one_step_tracks_oseen_vortex() {
    let g = grid();
    let alpha = 1.3;
    let bg = oseen_background(alpha);
    let mut s = SimState::new(oseen_vortex(alpha, 1.0, &g).unwrap(), ScalarField::zeros(&g), 1.0).unwrap();
    let c = StepControls::default();
    let n = 20;
    for _ in 0..n {
        s = step(&s, &bg, 1.0 / n as f64, &c).unwrap();
    }
    let exact = oseen_vortex(alpha, 2.0, &g).unwrap();
    assert!((s.t - 2.0).abs() < 1e-12);
    assert!(sup_rel(&s.omega, &exact) <= 1e-5);
}

#[test]
fn pure_divergence_creates_no_vorticity() {
    let g = grid();
    let beta = 2.0 * PI;
    let bg = Background::new(0.0, Arc::new(solve_ws_default(beta).unwrap()));
    let d = ScalarField::from_fn(&g, |x1, x2| beta * gaussian(x1, x2));
    let mut s = SimState::new(ScalarField::zeros(&g), d, 1.0).unwrap();
    for _ in 0..5 {
        s = step(&s, &bg, 0.05, &StepControls::default()).unwrap();
    }
    assert_eq!(s.omega.max_abs(), 0.0);
    let exact = ScalarField::from_fn(&g, |x1, x2| beta * heat_kernel(x1, x2, 1.25));
    assert!(s.d.sub(&exact).unwrap().max_abs() < 1e-11);
}

#[test]
fn masses_do_not_drift_over_many_steps() {
    let g = make_grid(64, 24.0).unwrap();
    let beta = 0.4;
    let w = ScalarField::from_fn(&g, |x1, x2| 0.5 * gaussian(x1 - 1.0, x2) + 0.5 * gaussian(x1 + 1.0, x2));
    let d = ScalarField::from_fn(&g, |x1, x2| beta * gaussian(x1, x2) + d1g(x1, x2));
    let mut s = SimState::new(w, d, 1.0).unwrap();
    let bg = background_for(&s).unwrap();
    let (a0, b0) = (s.alpha, s.beta);
    let c = StepControls::default();
    for _ in 0..3000 {
        s = step(&s, &bg, 2e-4, &c).unwrap();
    }
    assert!((s.measured_alpha() - a0).abs() <= 1e-8);
    assert!((s.measured_beta() - b0).abs() <= 1e-8);
}

#[test]
fn cfl_examples() {
    let c = StepControls::<f64>::default();
    let g = grid();
    assert_eq!(cfl_dt(&VelocityField::zeros(&g), &c), c.dt_max);
    let c = StepControls { dt_max: 1.0, ..c };
    assert!((cfl_dt_for_speed(1.0, 0.15625, &c) - 0.0625).abs() < 1e-15);
    let g2 = make_grid(512, 40.0).unwrap();
    let u = |g: &Arc<GridSpec<f64>>| {
        VelocityField::new(ScalarField::from_fn(g, |_, _| 1.0), ScalarField::zeros(g)).unwrap()
    };
    assert!((cfl_dt(&u(&g), &c) / cfl_dt(&u(&g2), &c) - 2.0).abs() < 1e-12);
}

#[test]
fn controls_are_validated() {
    let bad = StepControls::<f64> { cfl_number: 1.5, ..Default::default() };
    assert!(bad.validate().is_err());
    let bad = StepControls::<f64> { dt_max: 0.0, ..Default::default() };
    assert!(bad.validate().is_err());
    let bad = StepControls::<f64> { monitor_every: 0, ..Default::default() };
    assert!(bad.validate().is_err());
}

#[test]
fn step_detects_non_finite_state() {
    let g = make_grid(32, 20.0).unwrap();
    let bg = oseen_background(1.0);
    let s = SimState::new(oseen_vortex(1.0, 1.0, &g).unwrap(), ScalarField::zeros(&g), 1.0).unwrap();
    assert!(matches!(step(&s, &bg, f64::INFINITY, &StepControls::default()), Err(EnsError::InvalidArgument(_))));
    let mut broken = s.clone();
    broken.omega.values_mut()[5] = f64::NAN;
    assert!(matches!(step(&broken, &bg, 0.01, &StepControls::default()), Err(EnsError::BlowUp { .. })));
}

#[test]
fn rescaling_is_the_exact_symmetry() {
    let g = grid();
    let w = oseen_vortex(1.0, 4.0, &g).unwrap();
    let d = ScalarField::from_fn(&g, |x1, x2| 0.2 * heat_kernel(x1, x2, 4.0));
    let s = SimState::new(w, d, 4.0).unwrap();
    let r = rescale_by_two(&s).unwrap();
    assert_eq!(r.t, 1.0);
    let exact = oseen_vortex(1.0, 1.0, &g).unwrap();
    let n = g.n();
    for j in 0..n {
        for i in 0..n {
            let (a, b) = (r.omega.values()[j * n + i], exact.values()[j * n + i]);
            if (n / 4..3 * n / 4).contains(&i) && (n / 4..3 * n / 4).contains(&j) {
                assert!((a - b).abs() < 1e-15);
            } else {
                assert_eq!(a, 0.0);
            }
        }
    }
    assert!((r.measured_alpha() - 1.0).abs() < 1e-10);
    assert!((r.measured_beta() - 0.2).abs() < 1e-10);
}

#[test]
fn oseen_trajectory_with_restarts() {
    let g = grid();
    let s = SimState::new(oseen_vortex(1.0, 1.0, &g).unwrap(), ScalarField::zeros(&g), 1.0).unwrap();
    let c = StepControls { monitor_every: 5, ..Default::default() };
    let traj = evolve(&s, 10.0, &c).unwrap().into_result().unwrap();
    assert_eq!(traj.restarts, 1);
    assert!((traj.final_time() - 10.0).abs() < 1e-12);
    assert!(traj.rows.windows(2).all(|w| w[1].t > w[0].t));
    for r in &traj.rows {
        assert!(r.th1().iter().all(|&v| v <= 1e-4), "{r:?}");
        assert!(r.alpha_resid <= 1e-8);
    }
    let p = traj.physical_final_state().unwrap();
    assert!((p.t - 10.0).abs() < 1e-12);
    assert_eq!(p.grid().box_len(), 80.0);
}

#[test]
fn zero_data_stays_zero() {
    let g = make_grid(64, 20.0).unwrap();
    let z = ScalarField::zeros(&g);
    let s = SimState::new(z.clone(), z, 1.0).unwrap();
    let traj = evolve(&s, 2.0, &StepControls::default()).unwrap().into_result().unwrap();
    assert_eq!(traj.final_state.omega.max_abs(), 0.0);
    assert_eq!(traj.final_state.d.max_abs(), 0.0);
    assert!(traj.rows.iter().all(|r| r.l1 == 0.0 && r.d_pinf == 0.0));
}

#[test]
fn radial_data_stays_radial() {
    let g = grid();
    let beta = 1.0;
    let w = ScalarField::from_fn(&g, |x1, x2| {
        let r2 = x1 * x1 + x2 * x2;
        (1.0 + r2 / 8.0) * gaussian(x1, x2) / 1.5
    });
    let d = ScalarField::from_fn(&g, |x1, x2| beta * gaussian(x1 / 1.2, x2 / 1.2) / 1.44);
    let s = SimState::new(w, d, 1.0).unwrap();
    let c = StepControls { snapshot_every: 20, ..Default::default() };
    let traj = evolve(&s, 10.0, &c).unwrap().into_result().unwrap();
    assert!(traj.snapshots.len() >= 4);
    for snap in &traj.snapshots {
        let w = &snap.omega;
        let norm = lp_norm(w, 2.0).unwrap();
        for other in [w.rotated(), w.reflected()] {
            let anti = lp_norm(&w.sub(&other).unwrap().scale(0.5), 2.0).unwrap();
            assert!(anti <= 1e-8 * norm, "t={} anti={anti}", snap.t);
        }
    }
}

#[test]
fn fourth_order_in_time_with_advection() {
    // tilde pair with beta = 2 pi carries nontrivial radial advection
    let g = grid();
    let profile = solve_ws_default(2.0 * PI).unwrap();
    let bg = Background::new(1.0, Arc::new(profile.clone()));
    let (w0, dd0) = tilde_pair_with(&profile, 1.0, 1.0, &g).unwrap();
    let (w1, _) = tilde_pair_with(&profile, 1.0, 2.0, &g).unwrap();
    let s0 = SimState::new(w0, dd0, 1.0).unwrap();
    let run = |n: usize| {
        let mut s = s0.clone();
        for _ in 0..n {
            s = step(&s, &bg, 1.0 / n as f64, &StepControls::default()).unwrap();
        }
        sup_rel(&s.omega, &w1)
    };
    let (e1, e2, e3) = (run(2), run(4), run(8));
    assert!(e1 / e2 > 10.0 && e2 / e3 > 10.0, "{e1:e} {e2:e} {e3:e}");
}

fn d1g_field(g: &Arc<GridSpec<f64>>) -> ScalarField<f64> {
    ScalarField::from_fn(g, d1g)
}

#[test]
fn operator_l_fixed_point_and_eigenmode() {
    let g = grid();
    let lg = apply_L(&ScalarField::from_fn(&g, gaussian)).unwrap();
    assert!(lg.max_abs() <= 1e-8);
    let f = d1g_field(&g);
    let lf = apply_L(&f).unwrap();
    assert!(lf.axpy(0.5, &f).unwrap().max_abs() <= 1e-8);
    let loc = ScalarField::from_fn(&g, |x1, x2| gaussian(x1 - 1.0, x2 + 0.5) * (1.0 + x1 * x2));
    assert!(mean_integral(&apply_L(&loc).unwrap()).abs() <= 1e-10);
}

#[test]
fn operator_l_guards_the_edge() {
    let g = make_grid(64, 10.0).unwrap();
    let wide = ScalarField::from_fn(&g, |x1, x2| gaussian(x1 / 3.0, x2 / 3.0));
    assert!(matches!(apply_L(&wide), Err(EnsError::WeightBlowUp { .. })));
}

#[test]
fn semigroup_fixes_gaussian_and_scales_dipole() {
    for &tau in &[0.0, 0.3, 1.0, 2.0] {
        let g = make_grid(256, if tau > 1.0 { 64.0 } else { 40.0 }).unwrap();
        let gg = ScalarField::from_fn(&g, gaussian);
        let f = d1g_field(&g);
        let sg = semigroup_apply(&gg, tau).unwrap();
        let exact = ScalarField::from_fn(sg.grid(), gaussian);
        assert!(sg.sub(&exact).unwrap().max_abs() <= 1e-8, "tau={tau}");
        let sf = semigroup_apply(&f, tau).unwrap();
        let exact = ScalarField::from_fn(sf.grid(), d1g).scale((-tau / 2.0).exp());
        assert!(sf.sub(&exact).unwrap().max_abs() <= 1e-8, "tau={tau}");
    }
}

#[test]
fn semigroup_conserves_mass_and_commutes_with_derivatives() {
    let g = grid();
    let f = ScalarField::from_fn(&g, |x1, x2| gaussian(x1 - 0.7, x2) * (1.0 + 0.3 * x2) + d1g(x1, x2 + 1.0));
    for &tau in &[0.25, 0.5, 1.0] {
        let sf = semigroup_apply(&f, tau).unwrap();
        assert!((mean_integral(&sf) - mean_integral(&f)).abs() <= 1e-10);
        for axis in [Axis::X1, Axis::X2] {
            let lhs = crate::spectral::derivative(&sf, axis);
            let rhs = semigroup_apply(&crate::spectral::derivative(&f, axis), tau).unwrap().scale((tau / 2.0).exp());
            assert!(lhs.sub(&rhs.with_grid(lhs.grid()).unwrap()).unwrap().max_abs() <= 1e-8);
        }
    }
}

#[test]
fn semigroup_rejects_small_final_box() {
    let g = grid();
    let f = d1g_field(&g);
    assert!(matches!(semigroup_apply(&f, 6.0), Err(EnsError::BoxTooSmall { .. })));
    assert!(semigroup_apply(&f, -0.1).is_err());
}
