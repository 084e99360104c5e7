//! Scalar functionals tracked along trajectories: the theorem monitors,
//! relative entropy and Fisher information, the `beta` cross-term,
//! coercivity sides and decay-rate fits.

use crate::error::{EnsError, Result};
use crate::evolution::apply_L;
use crate::fields::{
    gaussian, lp_norm, noise_floor, to_self_similar, weighted_inner, weighted_w_norm,
    weighted_w_norm_scaled, SimState,
};
use crate::profiles::scaled_ws_field;
use crate::real::{one_minus_exp_over, Real};
use crate::spectral::{gradient, grid_integral, grid_l1, ScalarField};
use crate::velocity::{biot_savart, Background, RESIDUAL_MEAN_TOL};

/// Relative floor below which `W` counts as zero in entropy integrands.
pub const ENTROPY_FLOOR: f64 = 1e-14;

/// Schema version written in the diagnostics CSV header comment.
pub const CSV_SCHEMA_VERSION: u32 = 1;

pub const CSV_COLUMNS: [&str; 19] = [
    "t", "tau", "alpha_resid", "beta_resid", "l1", "l2", "linf", "th1_p1", "th1_p2", "th1_pinf",
    "d_p1", "d_p2", "d_pinf", "wp_w", "dp_w", "entropy", "fisher", "beta_cross", "envelope_ratio",
];

/// Diagnostics at one physical time `t`.
///
/// `l*` are `||omega - alpha omega_tilde||_p`, `th1_*` the same scaled by
/// `t^{1-1/p}`, `d_*` are `t^{3/2-1/p} ||d - beta G_t||_p`; `wp_w`, `dp_w`
/// the weighted perturbation norms in self-similar variables.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagnosticsRow {
    pub t: f64,
    pub tau: f64,
    pub alpha_resid: f64,
    pub beta_resid: f64,
    pub l1: f64,
    pub l2: f64,
    pub linf: f64,
    pub th1_p1: f64,
    pub th1_p2: f64,
    pub th1_pinf: f64,
    pub d_p1: f64,
    pub d_p2: f64,
    pub d_pinf: f64,
    pub wp_w: f64,
    pub dp_w: f64,
    pub entropy: Option<f64>,
    pub fisher: Option<f64>,
    pub beta_cross: f64,
    pub envelope_ratio: f64,
}

impl DiagnosticsRow {
    pub fn csv_header() -> String {
        format!("# ens diagnostics schema v{CSV_SCHEMA_VERSION}\n{}\n", CSV_COLUMNS.join(","))
    }

    pub fn to_csv_line(&self) -> String {
        let cells: Vec<String> = [
            Some(self.t),
            Some(self.tau),
            Some(self.alpha_resid),
            Some(self.beta_resid),
            Some(self.l1),
            Some(self.l2),
            Some(self.linf),
            Some(self.th1_p1),
            Some(self.th1_p2),
            Some(self.th1_pinf),
            Some(self.d_p1),
            Some(self.d_p2),
            Some(self.d_pinf),
            Some(self.wp_w),
            Some(self.dp_w),
            self.entropy,
            self.fisher,
            Some(self.beta_cross),
            Some(self.envelope_ratio),
        ]
        .iter()
        .map(|v| v.map(csv_number).unwrap_or_default())
        .collect();
        cells.join(",")
    }

    /// Scaled distances `t^{1-1/p} ||omega - alpha omega_tilde||_p` for `p = 1, 2, inf`.
    pub fn th1(&self) -> [f64; 3] {
        [self.th1_p1, self.th1_p2, self.th1_pinf]
    }

    /// `||d - beta G_t||_p` for `p = 1, 2, inf`, unscaled.
    pub fn d_raw(&self) -> [f64; 3] {
        [
            self.d_p1 / self.t.powf(0.5),
            self.d_p2 / self.t,
            self.d_pinf / self.t.powf(1.5),
        ]
    }

    pub fn is_finite(&self) -> bool {
        let opt = |v: Option<f64>| v.is_none_or(f64::is_finite);
        [
            self.t, self.tau, self.alpha_resid, self.beta_resid, self.l1, self.l2, self.linf,
            self.th1_p1, self.th1_p2, self.th1_pinf, self.d_p1, self.d_p2, self.d_pinf, self.wp_w,
            self.dp_w, self.beta_cross, self.envelope_ratio,
        ]
        .iter()
        .all(|v| v.is_finite())
            && opt(self.entropy)
            && opt(self.fisher)
    }
}

/// Shortest round-trip form; scientific notation outside `[1e-4, 1e15)`.
fn csv_number(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || !v.is_finite() || (1e-4..1e15).contains(&a) {
        v.to_string()
    } else {
        format!("{v:e}")
    }
}

/// Whole diagnostics CSV for `rows`, header included.
pub fn rows_to_csv(rows: &[DiagnosticsRow]) -> String {
    let mut out = DiagnosticsRow::csv_header();
    for r in rows {
        out.push_str(&r.to_csv_line());
        out.push('\n');
    }
    out
}

fn entropy_support<T: Real>(w: &ScalarField<T>, reference: &ScalarField<T>) -> Result<T> {
    w.check_same_grid(reference)?;
    let peak = w.max().max(T::zero());
    let floor = T::lit(ENTROPY_FLOOR) * peak;
    let min = w.min();
    if min < -floor {
        return Err(EnsError::NegativeVorticity { min: min.as_f64() });
    }
    Ok(floor)
}

/// `H(W | ref) = int W ln(W / ref)`, with the integrand set to 0 where
/// `W <= 1e-14 max W`.
pub fn relative_entropy<T: Real>(w: &ScalarField<T>, reference: &ScalarField<T>) -> Result<T> {
    let floor = entropy_support(w, reference)?;
    let mut acc = T::zero();
    for (&a, &b) in w.values().iter().zip(reference.values()) {
        if a <= floor {
            continue;
        }
        if !(b > T::zero()) {
            return Err(EnsError::InvalidArgument(
                "reference must be positive on the support of W".into(),
            ));
        }
        acc += a * (a.ln() - b.ln());
    }
    Ok(acc * w.grid().cell_area())
}

/// `I(W | ref) = int W |grad ln(W / ref)|^2`, gradients spectral, same floor.
pub fn fisher_information<T: Real>(w: &ScalarField<T>, reference: &ScalarField<T>) -> Result<T> {
    let floor = entropy_support(w, reference)?;
    let (w1, w2) = gradient(w);
    let (r1, r2) = gradient(reference);
    let mut acc = T::zero();
    for idx in 0..w.values().len() {
        let (a, b) = (w.values()[idx], reference.values()[idx]);
        if a <= floor {
            continue;
        }
        if !(b > T::zero()) {
            return Err(EnsError::InvalidArgument(
                "reference must be positive on the support of W".into(),
            ));
        }
        let g1 = w1.values()[idx] - a * r1.values()[idx] / b;
        let g2 = w2.values()[idx] - a * r2.values()[idx] / b;
        acc += (g1 * g1 + g2 * g2) / a;
    }
    Ok(acc * w.grid().cell_area())
}

/// Worst normalized residual `|dH/dtau + I| / max(1, I)` over interior rows,
/// with `dH/dtau` from the three-point nonuniform centered difference.
/// Rows without entropy are skipped. Returns `None` with fewer than three rows.
pub fn entropy_production_check(rows: &[DiagnosticsRow]) -> Option<f64> {
    let pts: Vec<(f64, f64, f64)> = rows
        .iter()
        .filter_map(|r| Some((r.tau, r.entropy?, r.fisher?)))
        .collect();
    if pts.len() < 3 {
        return None;
    }
    let mut worst: f64 = 0.0;
    for k in 1..pts.len() - 1 {
        let (t0, h0, _) = pts[k - 1];
        let (t1, h1, i1) = pts[k];
        let (t2, h2, _) = pts[k + 1];
        let (a, b) = (t1 - t0, t2 - t1);
        if a <= 0.0 || b <= 0.0 {
            continue;
        }
        let dh = -b / (a * (a + b)) * h0 + (b - a) / (a * b) * h1 + a / (b * (a + b)) * h2;
        worst = worst.max((dh + i1).abs() / i1.max(1.0));
    }
    Some(worst)
}

/// `beta int P K_BS*P . xi (1 - 4 pi G) / (2 pi |xi|^2)` with `P = W - ws_ref`.
pub fn beta_cross_term<T: Real>(w: &ScalarField<T>, ws_ref: &ScalarField<T>, beta: T) -> Result<T> {
    let p = w.sub(ws_ref)?;
    if beta == T::zero() || p.max_abs() == T::zero() {
        return Ok(T::zero());
    }
    let u = biot_savart(&p)?;
    let grid = w.grid();
    let n = grid.n();
    let mut acc = T::zero();
    for j in 0..n {
        let x2 = grid.coord(j);
        for i in 0..n {
            let idx = j * n + i;
            let x1 = grid.coord(i);
            // xi (1 - e^{-r^2/4}) / (2 pi r^2), regular at the origin
            let k = one_minus_exp_over((x1 * x1 + x2 * x2) / T::lit(4.0)) / (T::lit(8.0) * T::PI());
            acc += p.values()[idx] * k * (u.u1.values()[idx] * x1 + u.u2.values()[idx] * x2);
        }
    }
    Ok(beta * acc * grid.cell_area())
}

/// Both sides of the coercivity estimate for a mean-zero `W_p`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Coercivity<T> {
    pub lhs: T,
    pub rhs: T,
}

impl<T: Real> Coercivity<T> {
    pub fn holds(&self) -> bool {
        self.lhs >= self.rhs
    }
}

/// `lhs = -int G^{-1} W_p L W_p`,
/// `rhs = (g+e) ||W_p||_w^2 + (1 - 2(g+e))/2 [ ||grad W_p||_w^2 / 3 + ||xi W_p||_w^2 / 32 ]`.
pub fn coercivity_check<T: Real>(wp: &ScalarField<T>, gamma: T, epsilon: T) -> Result<Coercivity<T>> {
    if !(gamma >= T::zero() && epsilon > T::zero() && gamma + T::lit(1000.0) * epsilon < T::lit(0.5)) {
        return Err(EnsError::InvalidArgument(format!(
            "need gamma >= 0, epsilon > 0 and gamma + 1000 epsilon < 1/2, got ({gamma}, {epsilon})"
        )));
    }
    let mean = grid_integral(wp);
    let tol = T::lit(RESIDUAL_MEAN_TOL) * grid_l1(wp).max(T::one());
    if mean.abs() > tol {
        return Err(EnsError::NonZeroMean { mean: mean.as_f64(), tol: tol.as_f64() });
    }
    if wp.max_abs() == T::zero() {
        return Ok(Coercivity { lhs: T::zero(), rhs: T::zero() });
    }
    let lw = apply_L(wp)?;
    let lhs = -weighted_inner(wp, &lw)?;
    let (g1, g2) = gradient(wp);
    let grad2 = weighted_w_norm(&g1)?.powi(2) + weighted_w_norm(&g2)?.powi(2);
    let m1 = wp.map_with_position(|x1, _, v| x1 * v);
    let m2 = wp.map_with_position(|_, x2, v| x2 * v);
    let moment2 = weighted_w_norm(&m1)?.powi(2) + weighted_w_norm(&m2)?.powi(2);
    let ge = gamma + epsilon;
    let base = weighted_w_norm(wp)?.powi(2);
    let rhs = ge * base
        + (T::one() - T::lit(2.0) * ge) / T::lit(2.0)
            * (grad2 / T::lit(3.0) + moment2 / T::lit(32.0));
    Ok(Coercivity { lhs, rhs })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DecayModel {
    /// `v ~ t^p`, fitted on `(ln t, ln v)`.
    Power,
    /// `v ~ e^{p tau}`, fitted on `(tau, ln v)`.
    Exponential,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecayFit {
    pub exponent: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Least-squares slope of `ln v` against `ln t` or `t`.
pub fn decay_fit(times: &[f64], values: &[f64], model: DecayModel) -> Result<DecayFit> {
    if times.len() != values.len() {
        return Err(EnsError::InvalidArgument("times and values differ in length".into()));
    }
    if times.len() < 8 {
        return Err(EnsError::InvalidArgument(format!(
            "decay fit needs at least 8 samples, got {}",
            times.len()
        )));
    }
    if let Some(v) = values.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
        return Err(EnsError::InvalidArgument(format!("decay fit needs positive values, got {v}")));
    }
    let xs: Vec<f64> = match model {
        DecayModel::Power => {
            if let Some(t) = times.iter().find(|t| !(**t > 0.0)) {
                return Err(EnsError::InvalidArgument(format!("power fit needs t > 0, got {t}")));
            }
            times.iter().map(|t| t.ln()).collect()
        }
        DecayModel::Exponential => times.to_vec(),
    };
    let ys: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(EnsError::InvalidArgument("decay fit needs distinct abscissae".into()));
    }
    let exponent = sxy / sxx;
    let intercept = my - exponent * mx;
    let r_squared = if syy == 0.0 { 1.0 } else { (sxy * sxy / (sxx * syy)).min(1.0) };
    Ok(DecayFit { exponent, intercept, r_squared })
}

/// `max |W| e^{|xi|^2/8}` over the samples above the noise floor: the
/// constant of the tightest envelope `C e^{-|xi|^2/8}`.
pub fn gaussian_envelope<T: Real>(w: &ScalarField<T>) -> T {
    let cut = noise_floor::<T>() * w.max_abs();
    let grid = w.grid();
    let mut best = T::zero();
    for (idx, &v) in w.values().iter().enumerate() {
        if v.abs() <= cut {
            continue;
        }
        let (x1, x2) = grid.position(idx);
        best = best.max(v.abs() * ((x1 * x1 + x2 * x2) / T::lit(8.0)).exp());
    }
    best
}

/// Whether the envelope constant grows by more than 2x after the first unit
/// of `tau` (relative to its value at that point).
pub fn envelope_flagged(rows: &[DiagnosticsRow]) -> bool {
    let Some(first) = rows.first() else { return false };
    let start = first.tau + 1.0;
    let Some(anchor) = rows.iter().find(|r| r.tau >= start) else { return false };
    rows.iter().filter(|r| r.tau >= anchor.tau).any(|r| r.envelope_ratio > 2.0 * anchor.envelope_ratio)
}

/// Norm monitors of a state against its background.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TheoremMonitors {
    pub l: [f64; 3],
    pub th1: [f64; 3],
    pub d: [f64; 3],
    pub wp_w: f64,
    pub dp_w: f64,
}

const EXPONENTS: [f64; 3] = [1.0, 2.0, f64::INFINITY];

/// Monitors for `state` in computational units; `time_scale` converts to
/// physical ones (see [`crate::evolution::Trajectory`]).
pub fn theorem_monitors<T: Real>(
    state: &SimState<T>,
    background: &Background<T>,
    time_scale: T,
) -> Result<TheoremMonitors> {
    let grid = state.grid();
    let (w_bg, d_bg) = background.fields(state.t, grid)?;
    let wr = state.omega.sub(&w_bg)?;
    let dr = state.d.sub(&d_bg)?;
    let scale = time_scale.as_f64();
    let t = time_scale.as_f64() * state.t.as_f64();
    let mut out = TheoremMonitors { l: [0.0; 3], th1: [0.0; 3], d: [0.0; 3], wp_w: 0.0, dp_w: 0.0 };
    for (k, &p) in EXPONENTS.iter().enumerate() {
        let q = 1.0 - 1.0 / p;
        let to_phys = scale.powf(-q);
        out.l[k] = lp_norm(&wr, T::lit(p))?.as_f64() * to_phys;
        out.th1[k] = t.powf(q) * out.l[k];
        out.d[k] = t.powf(0.5 + q) * lp_norm(&dr, T::lit(p))?.as_f64() * to_phys;
    }
    let ss = to_self_similar(state)?;
    let xi = ss.grid().clone();
    let w = ss.w();
    let dd = ss.d();
    let ws = scaled_ws_field(&background.profile, background.alpha, T::one(), &xi)?;
    let beta = background.beta;
    let wp = w.sub(&ws)?;
    let dp = dd.map_with_position(|x1, x2, v| v - beta * gaussian(x1, x2));
    let w_scale = w.max_abs().max(ws.max_abs());
    let d_scale = dd.max_abs().max(beta.abs() * gaussian(T::zero(), T::zero()));
    out.wp_w = weighted_w_norm_scaled(&wp, w_scale)?.as_f64();
    out.dp_w = weighted_w_norm_scaled(&dp, d_scale)?.as_f64();
    Ok(out)
}

/// Stateful row builder: remembers the initial envelope constant.
#[derive(Clone, Debug)]
pub struct Monitor<T: Real> {
    background: Background<T>,
    envelope0: Option<f64>,
}

impl<T: Real> Monitor<T> {
    pub fn new(background: Background<T>) -> Self {
        Self { background, envelope0: None }
    }

    pub fn background(&self) -> &Background<T> {
        &self.background
    }

    pub fn row(&mut self, state: &SimState<T>, time_scale: T) -> Result<DiagnosticsRow> {
        let m = theorem_monitors(state, &self.background, time_scale)?;
        let t = time_scale.as_f64() * state.t.as_f64();
        let ss = to_self_similar(state)?;
        let w = ss.w();
        let bg = &self.background;
        let ws = scaled_ws_field(&bg.profile, bg.alpha, T::one(), ss.grid())?;
        let (entropy, fisher) = if bg.alpha > T::zero() {
            match (relative_entropy(&w, &ws), fisher_information(&w, &ws)) {
                (Ok(h), Ok(i)) => (Some(h.as_f64()), Some(i.as_f64())),
                (Err(EnsError::NegativeVorticity { .. }), _) | (_, Err(EnsError::NegativeVorticity { .. })) => {
                    (None, None)
                }
                (Err(e), _) | (_, Err(e)) => return Err(e),
            }
        } else {
            (None, None)
        };
        let beta_cross = beta_cross_term(&w, &ws, bg.beta)?.as_f64();
        let env = gaussian_envelope(&w).as_f64();
        let env0 = *self.envelope0.get_or_insert(env);
        let envelope_ratio = if env0 > 0.0 { env / env0 } else { 0.0 };
        Ok(DiagnosticsRow {
            t,
            tau: t.ln(),
            alpha_resid: (state.measured_alpha() - state.alpha).abs().as_f64(),
            beta_resid: (state.measured_beta() - state.beta).abs().as_f64(),
            l1: m.l[0],
            l2: m.l[1],
            linf: m.l[2],
            th1_p1: m.th1[0],
            th1_p2: m.th1[1],
            th1_pinf: m.th1[2],
            d_p1: m.d[0],
            d_p2: m.d[1],
            d_pinf: m.d[2],
            wp_w: m.wp_w,
            dp_w: m.dp_w,
            entropy,
            fisher,
            beta_cross,
            envelope_ratio,
        })
    }
}

#[cfg(test)]
mod tests;
