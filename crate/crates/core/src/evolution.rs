//! Time integration in physical variables and the self-similar operators.
//!
//! `d` follows the exact Fourier heat flow. `omega` is advanced by a
//! fourth-order integrating-factor Runge-Kutta scheme with diffusion taken
//! exactly. Long runs rescale the state by the exact scaling symmetry
//! `omega -> 4 omega(2x, 4t)` to stay on a fixed grid.

use std::sync::Arc;

use rustfft::num_complex::Complex;

use crate::diagnostics::{DiagnosticsRow, Monitor};
use crate::error::{EnsError, Result};
use crate::fields::{weighted_w_norm, SimState};
use crate::profiles::solve_ws_default;
use crate::real::Real;
use crate::spectral::{Axis, GridSpec, ScalarField, Spectrum};
use crate::velocity::{Background, BackgroundParts, VelocityField};

/// Ratio `t_end / t_start` of one segment before restart-rescaling.
pub const RESTART_FACTOR: f64 = 4.0;
const BLOW_UP_GROWTH: f64 = 10.0;
const CONSERVATION_LIMIT: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct StepControls<T: Real> {
    pub cfl_number: T,
    pub dt_max: T,
    pub dealias: bool,
    /// Snapshot cadence in steps; 0 disables snapshots.
    pub snapshot_every: usize,
    /// Diagnostics cadence in steps (at least 1).
    pub monitor_every: usize,
    pub restart_rescale: bool,
}

impl<T: Real> Default for StepControls<T> {
    fn default() -> Self {
        Self {
            cfl_number: T::lit(0.4),
            dt_max: T::lit(0.05),
            dealias: true,
            snapshot_every: 0,
            monitor_every: 1,
            restart_rescale: true,
        }
    }
}

impl<T: Real> StepControls<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.cfl_number > T::zero() && self.cfl_number <= T::one()) {
            return Err(EnsError::InvalidArgument(format!(
                "cfl_number must lie in (0, 1], got {}",
                self.cfl_number
            )));
        }
        if !(self.dt_max > T::zero()) || !self.dt_max.is_finite() {
            return Err(EnsError::InvalidArgument(format!("dt_max must be > 0, got {}", self.dt_max)));
        }
        if self.monitor_every == 0 {
            return Err(EnsError::InvalidArgument("monitor_every must be >= 1".into()));
        }
        Ok(())
    }
}

fn heat_multiply<T: Real>(s: &mut Spectrum<T>, dt: T) {
    if dt != T::zero() {
        s.scale_modes(|k1, k2| (-(k1 * k1 + k2 * k2) * dt).exp());
    }
}

fn heat_spectrum<T: Real>(s: &Spectrum<T>, dt: T) -> Spectrum<T> {
    let mut out = s.clone();
    heat_multiply(&mut out, dt);
    out
}

fn axpy<T: Real>(y: &Spectrum<T>, c: T, x: &Spectrum<T>) -> Spectrum<T> {
    let mut out = y.clone();
    for (a, b) in out.coeffs_mut().iter_mut().zip(x.coeffs()) {
        *a = *a + *b * c;
    }
    out
}

/// Exact periodic heat flow `e^{dt Delta} d`.
pub fn heat_evolve_exact<T: Real>(d: &ScalarField<T>, dt: T) -> Result<ScalarField<T>> {
    if !(dt >= T::zero()) {
        return Err(EnsError::InvalidArgument(format!("heat-flow duration must be >= 0, got {dt}")));
    }
    if dt == T::zero() {
        return Ok(d.clone());
    }
    let mut s = Spectrum::forward(d);
    heat_multiply(&mut s, dt);
    Ok(s.inverse())
}

/// Spectrum of `-div(u omega)` and the peak speed, from the spectra of the
/// fields at time `t`.
fn nonlinear<T: Real>(
    omega_hat: &Spectrum<T>,
    d_hat: &Spectrum<T>,
    parts: &BackgroundParts<T>,
    dealias: bool,
) -> Result<(Spectrum<T>, T)> {
    let u = parts.velocity_of(omega_hat, d_hat)?;
    let omega = if dealias { omega_hat.dealiased().inverse() } else { omega_hat.inverse() };
    let f1 = u.u1.mul(&omega)?;
    let f2 = u.u2.mul(&omega)?;
    let a = Spectrum::forward(&f1).derivative(Axis::X1);
    let b = Spectrum::forward(&f2).derivative(Axis::X2);
    let mut out = a.add(&b)?;
    for c in out.coeffs_mut() {
        *c = -*c;
    }
    out.coeffs_mut()[0] = Complex::new(T::zero(), T::zero());
    if dealias {
        out.dealias_in_place();
    }
    Ok((out, u.max_speed()))
}

/// `-div(u omega)` in conservative form, `u` from [`reconstruct_velocity`].
pub fn rhs_vorticity<T: Real>(
    omega: &ScalarField<T>,
    d: &ScalarField<T>,
    t: T,
    background: &Background<T>,
    dealias: bool,
) -> Result<ScalarField<T>> {
    omega.check_same_grid(d)?;
    let parts = BackgroundParts::new(background, t, omega.grid())?;
    let (n, _) = nonlinear(&Spectrum::forward(omega), &Spectrum::forward(d), &parts, dealias)?;
    Ok(n.inverse())
}

/// `min(dt_max, cfl dx / max|u|)`.
pub fn cfl_dt<T: Real>(u: &VelocityField<T>, controls: &StepControls<T>) -> T {
    cfl_dt_for_speed(u.max_speed(), u.grid().dx(), controls)
}

pub fn cfl_dt_for_speed<T: Real>(speed: T, dx: T, controls: &StepControls<T>) -> T {
    if speed > T::zero() {
        controls.dt_max.min(controls.cfl_number * dx / speed)
    } else {
        controls.dt_max
    }
}

fn check_step<T: Real>(old: &SimState<T>, new: &SimState<T>) -> Result<()> {
    let t = new.t.as_f64();
    if !new.omega.is_finite() || !new.d.is_finite() {
        return Err(EnsError::BlowUp { t, reason: "non-finite values".into() });
    }
    let (before, after) = (old.omega.max_abs(), new.omega.max_abs());
    if after > T::lit(BLOW_UP_GROWTH) * before && after > T::lit(1e-300) {
        return Err(EnsError::BlowUp {
            t,
            reason: format!("sup |omega| grew from {before:e} to {after:e} in one step"),
        });
    }
    let d_alpha = (new.measured_alpha() - old.alpha).abs();
    let d_beta = (new.measured_beta() - old.beta).abs();
    let limit = T::lit(CONSERVATION_LIMIT) * (T::one() + old.alpha.abs() + old.beta.abs());
    if d_alpha > limit || d_beta > limit {
        return Err(EnsError::ConservationBreach {
            t,
            d_alpha: d_alpha.as_f64(),
            d_beta: d_beta.as_f64(),
            limit: limit.as_f64(),
        });
    }
    Ok(())
}

/// Advances `(omega, d)` by `dt`. The conserved masses stay those cached in
/// `state` and are compared against the new fields.
pub fn step<T: Real>(
    state: &SimState<T>,
    background: &Background<T>,
    dt: T,
    controls: &StepControls<T>,
) -> Result<SimState<T>> {
    if !(dt > T::zero()) || !dt.is_finite() {
        return Err(EnsError::InvalidArgument(format!("time step must be > 0, got {dt}")));
    }
    if !state.omega.is_finite() || !state.d.is_finite() {
        return Err(EnsError::BlowUp { t: state.t.as_f64(), reason: "non-finite state".into() });
    }
    let w0 = Spectrum::forward(&state.omega);
    let d0 = Spectrum::forward(&state.d);
    let parts0 = BackgroundParts::new(background, state.t, state.grid())?;
    let k1 = nonlinear(&w0, &d0, &parts0, controls.dealias)?.0;
    advance(state, &w0, &d0, k1, background, dt, controls)
}

/// The IF-RK4 step once the first stage `k1` is known.
fn advance<T: Real>(
    state: &SimState<T>,
    w0: &Spectrum<T>,
    d0: &Spectrum<T>,
    k1: Spectrum<T>,
    background: &Background<T>,
    h: T,
    controls: &StepControls<T>,
) -> Result<SimState<T>> {
    let (t, grid) = (state.t, state.grid());
    let half = h / T::lit(2.0);
    let d_half = heat_spectrum(d0, half);
    let d_full = heat_spectrum(d0, h);
    let mid_parts = BackgroundParts::new(background, t + half, grid)?;
    let end_parts = BackgroundParts::new(background, t + h, grid)?;
    let rhs = |w: &Spectrum<T>, d: &Spectrum<T>, parts: &BackgroundParts<T>| {
        nonlinear(w, d, parts, controls.dealias).map(|(n, _)| n)
    };

    let w_half = heat_spectrum(w0, half);
    let k2 = rhs(&heat_spectrum(&axpy(w0, half, &k1), half), &d_half, &mid_parts)?;
    let k3 = rhs(&axpy(&w_half, half, &k2), &d_half, &mid_parts)?;
    let k4 = rhs(&axpy(&heat_spectrum(w0, h), h, &heat_spectrum(&k3, half)), &d_full, &end_parts)?;

    let mut mid = k2.clone();
    for (a, b) in mid.coeffs_mut().iter_mut().zip(k3.coeffs()) {
        *a = *a + *b;
    }
    heat_multiply(&mut mid, half);
    let mut acc = heat_spectrum(&k1, h);
    for ((a, m), k) in acc.coeffs_mut().iter_mut().zip(mid.coeffs()).zip(k4.coeffs()) {
        *a = *a + *m * T::lit(2.0) + *k;
    }
    let w1 = axpy(&heat_spectrum(w0, h), h / T::lit(6.0), &acc);

    let next = SimState {
        omega: w1.inverse(),
        d: d_full.inverse(),
        t: t + h,
        alpha: state.alpha,
        beta: state.beta,
    };
    check_step(state, &next)?;
    Ok(next)
}

/// Maps the state at computational time `t` to the equivalent state at
/// `t / 4` by the exact symmetry `f(x) -> 4 f(2x)`. Samples that fall
/// outside the old box are zero.
pub fn rescale_by_two<T: Real>(state: &SimState<T>) -> Result<SimState<T>> {
    let grid = state.grid();
    let n = grid.n() as i64;
    let c = n / 2;
    let resample = |f: &ScalarField<T>| {
        let mut out = vec![T::zero(); f.values().len()];
        for j in 0..n {
            let jo = 2 * j - c;
            if jo < 0 || jo >= n {
                continue;
            }
            for i in 0..n {
                let io = 2 * i - c;
                if io < 0 || io >= n {
                    continue;
                }
                out[(j * n + i) as usize] = T::lit(4.0) * f.values()[(jo * n + io) as usize];
            }
        }
        ScalarField::from_values(grid, out)
    };
    Ok(SimState {
        omega: resample(&state.omega)?,
        d: resample(&state.d)?,
        t: state.t / T::lit(RESTART_FACTOR),
        alpha: state.alpha,
        beta: state.beta,
    })
}

/// Physical-unit copy of `(omega, d)` at physical time `t`.
#[derive(Clone, Debug)]
pub struct Snapshot<T: Real> {
    pub t: T,
    pub omega: ScalarField<T>,
    pub d: ScalarField<T>,
}

/// Evolution record. Rows carry physical times; `final_state` is in
/// computational units, related to physical ones by `time_scale`
/// (`t_phys = time_scale * t`, `x_phys = sqrt(time_scale) * x`).
#[derive(Debug)]
pub struct Trajectory<T: Real> {
    pub rows: Vec<DiagnosticsRow>,
    pub snapshots: Vec<Snapshot<T>>,
    pub final_state: SimState<T>,
    pub time_scale: T,
    pub steps: usize,
    pub restarts: usize,
    /// Set when the run stopped early; rows up to the failure are kept.
    pub failure: Option<EnsError>,
}

impl<T: Real> Trajectory<T> {
    pub fn final_time(&self) -> T {
        self.time_scale * self.final_state.t
    }

    pub fn is_complete(&self) -> bool {
        self.failure.is_none()
    }

    /// The final state in physical units.
    pub fn physical_final_state(&self) -> Result<SimState<T>> {
        to_physical(&self.final_state, self.time_scale)
    }

    /// Turns an early stop into an error.
    pub fn into_result(self) -> Result<Self> {
        match self.failure {
            Some(e) => Err(e),
            None => Ok(self),
        }
    }
}

fn to_physical<T: Real>(s: &SimState<T>, scale: T) -> Result<SimState<T>> {
    if scale == T::one() {
        return Ok(s.clone());
    }
    let grid = s.grid().scaled(scale.sqrt())?;
    Ok(SimState {
        omega: s.omega.scale(T::one() / scale).with_grid(&grid)?,
        d: s.d.scale(T::one() / scale).with_grid(&grid)?,
        t: s.t * scale,
        alpha: s.alpha,
        beta: s.beta,
    })
}

/// Background split matching the masses cached in `state`.
pub fn background_for<T: Real>(state: &SimState<T>) -> Result<Background<T>> {
    Ok(Background::new(state.alpha, Arc::new(solve_ws_default(state.beta)?)))
}

/// Evolves to physical time `t_end`, recording diagnostics at the monitor
/// cadence. Step failures end the run with `failure` set.
pub fn evolve<T: Real>(state: &SimState<T>, t_end: T, controls: &StepControls<T>) -> Result<Trajectory<T>> {
    let background = background_for(state)?;
    evolve_with(state, t_end, controls, &background)
}

pub fn evolve_with<T: Real>(
    state: &SimState<T>,
    t_end: T,
    controls: &StepControls<T>,
    background: &Background<T>,
) -> Result<Trajectory<T>> {
    controls.validate()?;
    if !(t_end > state.t) {
        return Err(EnsError::InvalidArgument(format!(
            "t_end = {t_end} must exceed the initial time {}",
            state.t
        )));
    }
    let mut monitor = Monitor::new(background.clone());
    let mut current = state.clone();
    let mut scale = T::one();
    let mut segment_start = state.t;
    let mut rows = vec![monitor.row(&current, scale)?];
    let mut snapshots = Vec::new();
    if controls.snapshot_every > 0 {
        let p = to_physical(&current, scale)?;
        snapshots.push(Snapshot { t: p.t, omega: p.omega, d: p.d });
    }
    let (mut steps, mut restarts) = (0usize, 0usize);
    let mut failure = None;

    loop {
        let end = t_end / scale;
        if current.t >= end {
            break;
        }
        let restart_at = segment_start * T::lit(RESTART_FACTOR);
        let target = if controls.restart_rescale { end.min(restart_at) } else { end };
        let w0 = Spectrum::forward(&current.omega);
        let d0 = Spectrum::forward(&current.d);
        let first = if current.omega.is_finite() && current.d.is_finite() {
            BackgroundParts::new(background, current.t, current.grid())
                .and_then(|p| nonlinear(&w0, &d0, &p, controls.dealias))
        } else {
            Err(EnsError::BlowUp { t: current.t.as_f64(), reason: "non-finite state".into() })
        };
        let (k1, speed) = match first {
            Ok(v) => v,
            Err(e) => {
                failure = Some(e);
                break;
            }
        };
        let mut dt = cfl_dt_for_speed(speed, current.grid().dx(), controls);
        let remaining = target - current.t;
        let lands = dt >= remaining * (T::one() - T::lit(1e-9));
        if lands {
            dt = remaining;
        }
        match advance(&current, &w0, &d0, k1, background, dt, controls) {
            Ok(mut next) => {
                if lands {
                    next.t = target;
                }
                current = next;
            }
            Err(e) => {
                failure = Some(e);
                break;
            }
        }
        steps += 1;
        let finished = current.t >= end;
        if steps % controls.monitor_every == 0 || finished {
            match monitor.row(&current, scale) {
                Ok(r) => rows.push(r),
                Err(e) => {
                    failure = Some(e);
                    break;
                }
            }
        }
        if controls.snapshot_every > 0 && (steps % controls.snapshot_every == 0 || finished) {
            let p = to_physical(&current, scale)?;
            snapshots.push(Snapshot { t: p.t, omega: p.omega, d: p.d });
        }
        if !finished && controls.restart_rescale && lands && target == restart_at {
            current = rescale_by_two(&current)?;
            scale *= T::lit(RESTART_FACTOR);
            segment_start = current.t;
            restarts += 1;
        }
    }
    Ok(Trajectory { rows, snapshots, final_state: current, time_scale: scale, steps, restarts, failure })
}

fn drift_cutoff<T: Real>(r: T, half: T) -> T {
    let r1 = T::lit(0.9) * half;
    if r <= r1 {
        T::one()
    } else if r >= half {
        T::zero()
    } else {
        let s = (r - r1) / (half - r1);
        (T::one() + (T::PI() * s).cos()) / T::lit(2.0)
    }
}

/// `L f = Delta f + (1/2) xi . grad f + f` on a `xi`-grid, with the drift
/// tapered to zero over the outer tenth of the box.
#[allow(non_snake_case)]
pub fn apply_L<T: Real>(f: &ScalarField<T>) -> Result<ScalarField<T>> {
    weighted_w_norm(f)?;
    let s = Spectrum::forward(f);
    let lap = s.laplacian().inverse();
    let g1 = s.derivative(Axis::X1).inverse();
    let g2 = s.derivative(Axis::X2).inverse();
    let half = f.grid().box_len() / T::lit(2.0);
    let grid = f.grid();
    let n = grid.n();
    let mut out = vec![T::zero(); grid.len()];
    for j in 0..n {
        let x2 = grid.coord(j);
        for i in 0..n {
            let idx = j * n + i;
            let x1 = grid.coord(i);
            let chi = drift_cutoff((x1 * x1 + x2 * x2).sqrt(), half);
            let drift = (x1 * g1.values()[idx] + x2 * g2.values()[idx]) / T::lit(2.0) * chi;
            out[idx] = lap.values()[idx] + drift + f.values()[idx];
        }
    }
    ScalarField::from_values(grid, out)
}

/// Minimum final `xi`-box, eight Gaussian widths `sqrt 2`.
pub fn semigroup_min_box<T: Real>() -> T {
    T::lit(8.0) * T::SQRT_2()
}

/// `S(tau) f = e^{tau L} f` through the heat flow: `f` is taken as `t = 1`
/// data, heated for `e^tau - 1`, and read back in self-similar variables.
/// The result lives on the box `L e^{-tau/2}`.
pub fn semigroup_apply<T: Real>(f: &ScalarField<T>, tau: T) -> Result<ScalarField<T>> {
    if !(tau >= T::zero()) || !tau.is_finite() {
        return Err(EnsError::InvalidArgument(format!("tau must be >= 0, got {tau}")));
    }
    if tau == T::zero() {
        return Ok(f.clone());
    }
    let t = tau.exp();
    let final_box = f.grid().box_len() / t.sqrt();
    let required = semigroup_min_box::<T>();
    if final_box < required {
        return Err(EnsError::BoxTooSmall { box_len: final_box.as_f64(), required: required.as_f64() });
    }
    let heated = heat_evolve_exact(f, t - T::one())?;
    let grid: Arc<GridSpec<T>> = f.grid().scaled(T::one() / t.sqrt())?;
    heated.scale(t).with_grid(&grid)
}

#[cfg(test)]
mod tests;
