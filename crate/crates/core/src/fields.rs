//! Canonical analytic fields, the norms and integrals the analysis tracks,
//! and the exact self-similar change of variables.

use std::sync::Arc;

use crate::error::{EnsError, Result};
use crate::real::Real;
use crate::spectral::{grid_integral, make_grid, GridSpec, ScalarField};

/// Relative noise floor below which samples count as numerically zero in
/// the Gaussian-weighted norms.
pub fn noise_floor<T: Real>() -> T {
    T::lit(1e-13).max(T::epsilon() * T::lit(1e3))
}

/// Edge-to-peak ratio of the weighted integrand above which the weight is
/// considered to blow up.
pub const EDGE_DECAY_LIMIT: f64 = 1e-6;

/// Weighted norms below this fraction of `4 pi scale` are exempt from the
/// edge check.
pub const NEGLIGIBLE_WEIGHTED_NORM: f64 = 1e-4;

/// `G(x) = exp(-|x|^2 / 4) / (4 pi)`.
#[inline]
pub fn gaussian<T: Real>(x1: T, x2: T) -> T {
    (-(x1 * x1 + x2 * x2) / T::lit(4.0)).exp() / (T::lit(4.0) * T::PI())
}

pub fn gaussian_g<T: Real>(grid: &Arc<GridSpec<T>>) -> ScalarField<T> {
    ScalarField::from_fn(grid, gaussian)
}

/// Heat kernel `(1/t) G(x / sqrt t)` at `x`.
#[inline]
pub fn heat_kernel<T: Real>(x1: T, x2: T, t: T) -> T {
    let s = t.sqrt();
    gaussian(x1 / s, x2 / s) / t
}

/// `alpha (1/t) G(x / sqrt t)` sampled on the grid.
pub fn oseen_vortex<T: Real>(alpha: T, t: T, grid: &Arc<GridSpec<T>>) -> Result<ScalarField<T>> {
    if !(t > T::zero()) {
        return Err(EnsError::NonPositiveTime(t.as_f64()));
    }
    Ok(ScalarField::from_fn(grid, |x1, x2| alpha * heat_kernel(x1, x2, t)))
}

/// `dx^2 sum f`.
pub fn mean_integral<T: Real>(f: &ScalarField<T>) -> T {
    grid_integral(f)
}

fn check_exponent<T: Real>(p: T) -> Result<()> {
    if p >= T::one() {
        Ok(())
    } else {
        Err(EnsError::InvalidArgument(format!("Lebesgue exponent must be >= 1, got {p}")))
    }
}

/// `||f||_{L^p}`; pass `T::infinity()` for the grid maximum.
pub fn lp_norm<T: Real>(f: &ScalarField<T>, p: T) -> Result<T> {
    lpm_norm(f, p, T::zero())
}

/// `||f||_{L^p(m)}` with weight `(1 + |x|^2)^{p m / 2}`.
pub fn lpm_norm<T: Real>(f: &ScalarField<T>, p: T, m: T) -> Result<T> {
    check_exponent(p)?;
    if m < T::zero() {
        return Err(EnsError::InvalidArgument(format!("weight exponent must be >= 0, got {m}")));
    }
    let weight = |x1: T, x2: T| -> T {
        if m == T::zero() {
            T::one()
        } else {
            (T::one() + x1 * x1 + x2 * x2).powf(m / T::lit(2.0))
        }
    };
    let grid = f.grid();
    let n = grid.n();
    if p.is_infinite() {
        let mut best = T::zero();
        for (idx, &v) in f.values().iter().enumerate() {
            let (x1, x2) = (grid.coord(idx % n), grid.coord(idx / n));
            best = best.max(weight(x1, x2) * v.abs());
        }
        return Ok(best);
    }
    let mut acc = T::zero();
    for (idx, &v) in f.values().iter().enumerate() {
        if v == T::zero() {
            continue;
        }
        let (x1, x2) = (grid.coord(idx % n), grid.coord(idx / n));
        let a = v.abs() * weight(x1, x2);
        acc += if p == T::one() {
            a
        } else if p == T::lit(2.0) {
            a * a
        } else {
            a.powf(p)
        };
    }
    let integral = acc * grid.cell_area();
    Ok(if p == T::one() {
        integral
    } else if p == T::lit(2.0) {
        integral.sqrt()
    } else {
        integral.powf(T::one() / p)
    })
}

/// Per-sample `G^{-1} f g`, with samples under the noise floor dropped;
/// returns the integrand and the edge-to-peak ratio of `|integrand|`.
fn weighted_integrand<T: Real>(
    f: &ScalarField<T>,
    g: &ScalarField<T>,
    f_scale: T,
    g_scale: T,
) -> Result<(Vec<T>, T)> {
    f.check_same_grid(g)?;
    let grid = f.grid();
    let n = grid.n();
    let floor = noise_floor::<T>();
    let (f_cut, g_cut) = (floor * f_scale, floor * g_scale);
    let log_4pi = (T::lit(4.0) * T::PI()).ln();
    let mut out = vec![T::zero(); grid.len()];
    let mut peak = T::zero();
    let mut edge = T::zero();
    for j in 0..n {
        let x2 = grid.coord(j);
        for i in 0..n {
            let idx = j * n + i;
            let (a, b) = (f.values()[idx], g.values()[idx]);
            if a.abs() <= f_cut || b.abs() <= g_cut {
                continue;
            }
            let x1 = grid.coord(i);
            let log_mag =
                a.abs().ln() + b.abs().ln() + (x1 * x1 + x2 * x2) / T::lit(4.0) + log_4pi;
            let mag = log_mag.exp();
            let v = if (a < T::zero()) ^ (b < T::zero()) { -mag } else { mag };
            out[idx] = v;
            peak = peak.max(mag);
            if i == 0 || j == 0 || i == n - 1 || j == n - 1 {
                edge = edge.max(mag);
            }
        }
    }
    let ratio = if peak > T::zero() { edge / peak } else { T::zero() };
    let total = out.iter().map(|v| v.abs()).sum::<T>() * grid.cell_area();
    let significant =
        T::lit(NEGLIGIBLE_WEIGHTED_NORM) * T::lit(4.0) * T::PI() * (f_scale * g_scale).sqrt();
    let spreading = ratio >= T::lit(EDGE_DECAY_LIMIT) && total.sqrt() > significant;
    if !ratio.is_finite() || !peak.is_finite() || spreading {
        return Err(EnsError::WeightBlowUp { ratio: ratio.as_f64() });
    }
    Ok((out, ratio))
}

/// `||f||_w = (int G^{-1} f^2)^{1/2}`.
///
/// Samples with `|f| <= 1e-13 max|f|` are treated as zero; the remaining
/// integrand must have decayed to below `1e-6` of its peak at the box edge,
/// unless the whole norm sits below `1e-4` of the scale's natural size
/// `4 pi scale`.
pub fn weighted_w_norm<T: Real>(f: &ScalarField<T>) -> Result<T> {
    let s = f.max_abs();
    weighted_w_norm_scaled(f, s)
}

/// As [`weighted_w_norm`] with the noise floor taken relative to `scale`
/// (for perturbations of a field of magnitude `scale`).
pub fn weighted_w_norm_scaled<T: Real>(f: &ScalarField<T>, scale: T) -> Result<T> {
    let (vals, _) = weighted_integrand(f, f, scale, scale)?;
    Ok((vals.into_iter().sum::<T>() * f.grid().cell_area()).sqrt())
}

/// `int G^{-1} f g`, floored as in [`weighted_w_norm`].
pub fn weighted_inner<T: Real>(f: &ScalarField<T>, g: &ScalarField<T>) -> Result<T> {
    let (vals, _) = weighted_integrand(f, g, f.max_abs(), g.max_abs())?;
    Ok(vals.into_iter().sum::<T>() * f.grid().cell_area())
}

/// `int |x| |f(x)| dx`.
pub fn first_moment<T: Real>(f: &ScalarField<T>) -> T {
    let grid = f.grid();
    let n = grid.n();
    let s: T = f
        .values()
        .iter()
        .enumerate()
        .map(|(idx, &v)| {
            let (x1, x2) = (grid.coord(idx % n), grid.coord(idx / n));
            (x1 * x1 + x2 * x2).sqrt() * v.abs()
        })
        .sum();
    s * grid.cell_area()
}

/// Vorticity and divergence at physical time `t`, with their conserved masses.
#[derive(Clone, Debug)]
pub struct SimState<T: Real> {
    pub omega: ScalarField<T>,
    pub d: ScalarField<T>,
    pub t: T,
    pub alpha: T,
    pub beta: T,
}

impl<T: Real> SimState<T> {
    pub fn new(omega: ScalarField<T>, d: ScalarField<T>, t: T) -> Result<Self> {
        if !(t > T::zero()) {
            return Err(EnsError::NonPositiveTime(t.as_f64()));
        }
        omega.check_same_grid(&d)?;
        if !omega.is_finite() || !d.is_finite() {
            return Err(EnsError::InvalidArgument("state fields must be finite".into()));
        }
        let alpha = mean_integral(&omega);
        let beta = mean_integral(&d);
        Ok(Self { omega, d, t, alpha, beta })
    }

    pub fn grid(&self) -> &Arc<GridSpec<T>> {
        self.omega.grid()
    }

    pub fn measured_alpha(&self) -> T {
        mean_integral(&self.omega)
    }

    pub fn measured_beta(&self) -> T {
        mean_integral(&self.d)
    }
}

/// `(W, D, tau)` with `W(xi) = t omega(x)`, `D = t d`, `xi = x / sqrt t`,
/// `tau = ln t`.
///
/// Values are kept as the unscaled samples plus an amplitude so that mapping
/// back at the same `t` reproduces the original samples exactly.
#[derive(Clone, Debug)]
pub struct SelfSimilarState<T: Real> {
    raw_w: ScalarField<T>,
    raw_d: ScalarField<T>,
    amplitude: T,
    pub tau: T,
    origin: Option<(Arc<GridSpec<T>>, T)>,
}

impl<T: Real> SelfSimilarState<T> {
    /// Wraps `(W, D)` already sampled on a `xi`-grid.
    pub fn new(w: ScalarField<T>, d: ScalarField<T>, tau: T) -> Result<Self> {
        w.check_same_grid(&d)?;
        Ok(Self { raw_w: w, raw_d: d, amplitude: T::one(), tau, origin: None })
    }

    pub fn grid(&self) -> &Arc<GridSpec<T>> {
        self.raw_w.grid()
    }

    pub fn w(&self) -> ScalarField<T> {
        if self.amplitude == T::one() {
            self.raw_w.clone()
        } else {
            self.raw_w.scale(self.amplitude)
        }
    }

    pub fn d(&self) -> ScalarField<T> {
        if self.amplitude == T::one() {
            self.raw_d.clone()
        } else {
            self.raw_d.scale(self.amplitude)
        }
    }
}

/// Relabels a physical state as self-similar: box `L -> L / sqrt t`, values
/// scaled by `t`. No resampling takes place.
pub fn to_self_similar<T: Real>(s: &SimState<T>) -> Result<SelfSimilarState<T>> {
    if !(s.t > T::zero()) {
        return Err(EnsError::NonPositiveTime(s.t.as_f64()));
    }
    let xi_grid = if s.t == T::one() { s.grid().clone() } else { s.grid().scaled(T::one() / s.t.sqrt())? };
    Ok(SelfSimilarState {
        raw_w: s.omega.clone().with_grid(&xi_grid)?,
        raw_d: s.d.clone().with_grid(&xi_grid)?,
        amplitude: s.t,
        tau: s.t.ln(),
        origin: Some((s.grid().clone(), s.t)),
    })
}

/// Inverse of [`to_self_similar`] at physical time `t`.
pub fn from_self_similar<T: Real>(ss: &SelfSimilarState<T>, t: T) -> Result<SimState<T>> {
    if !(t > T::zero()) {
        return Err(EnsError::NonPositiveTime(t.as_f64()));
    }
    let x_grid = match &ss.origin {
        Some((g, t0)) if *t0 == t => g.clone(),
        _ if t == T::one() => ss.grid().clone(),
        _ => make_grid(ss.grid().n(), ss.grid().box_len() * t.sqrt())?,
    };
    let factor = ss.amplitude / t;
    let (omega, d) = if factor == T::one() {
        (ss.raw_w.clone(), ss.raw_d.clone())
    } else {
        (ss.raw_w.scale(factor), ss.raw_d.scale(factor))
    };
    SimState::new(omega.with_grid(&x_grid)?, d.with_grid(&x_grid)?, t)
}
