//! Radial self-similar steady profiles `W_s(beta)` and the self-similar
//! pair built from them.
//!
//! The steady ODE `W_s'/W_s = -r/2 + beta/(2 pi r) (1 - e^{-r^2/4})` is
//! separable, so `ln W_s` is integrated directly by per-interval
//! Gauss-Legendre quadrature and exponentiated. The profile is then scaled
//! to unit mass.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use crate::error::{EnsError, Result};
use crate::evolution::apply_L;
use crate::fields::{gaussian, heat_kernel, weighted_w_norm_scaled};
use crate::real::{one_minus_exp_over, Real};
use crate::spectral::{make_grid, Axis, GridSpec, ScalarField, Spectrum};
use crate::velocity::Background;

pub const DEFAULT_R_MAX: f64 = 40.0;
pub const DEFAULT_POINTS: usize = 8001;
const TAIL_LIMIT: f64 = 1e-12;
const QUADRATURE_NODES: usize = 16;

// 8-point Gauss-Legendre on [-1, 1].
const GL_NODES: [f64; 4] = [
    0.183_434_642_495_649_8,
    0.525_532_409_916_329_0,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL_WEIGHTS: [f64; 4] = [
    0.362_683_783_378_362_0,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

/// `(1 - e^{-s^2/4}) / s`, extended by continuity (`~ s/4`) at zero.
#[inline]
pub fn log_integrand<T: Real>(s: T) -> T {
    s / T::lit(4.0) * one_minus_exp_over(s * s / T::lit(4.0))
}

/// Right side of the steady ODE: `d ln W_s / dr`.
#[inline]
pub fn log_slope<T: Real>(beta: T, r: T) -> T {
    -r / T::lit(2.0) + beta / T::TAU() * log_integrand(r)
}

fn gauss_legendre<T: Real>(a: T, b: T, f: impl Fn(T) -> T) -> T {
    let mid = (a + b) / T::lit(2.0);
    let half = (b - a) / T::lit(2.0);
    let mut acc = T::zero();
    for (x, w) in GL_NODES.iter().zip(GL_WEIGHTS) {
        let dx = half * T::lit(*x);
        acc += T::lit(w) * (f(mid - dx) + f(mid + dx));
    }
    acc * half
}

/// Cubic Hermite interpolation on `[0, h]` at offset `s`.
#[inline]
fn hermite<T: Real>(y0: T, y1: T, d0: T, d1: T, h: T, s: T) -> T {
    let u = s / h;
    let u2 = u * u;
    let u3 = u2 * u;
    let two = T::lit(2.0);
    let three = T::lit(3.0);
    let h00 = two * u3 - three * u2 + T::one();
    let h10 = u3 - two * u2 + u;
    let h01 = -two * u3 + three * u2;
    let h11 = u3 - u2;
    h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1
}

/// Samples of a unit-mass steady profile `W_s` on `[0, r_max]`.
#[derive(Clone, Debug)]
pub struct RadialProfile<T: Real> {
    beta: T,
    h: T,
    r: Vec<T>,
    log_w: Vec<T>,
    slope: Vec<T>,
    w: Vec<T>,
    cumulative_mass: Vec<T>,
}

/// Solves for `W_s(beta)` on `n_points` equispaced radii covering `[0, r_max]`.
pub fn solve_ws<T: Real>(beta: T, r_max: T, n_points: usize) -> Result<RadialProfile<T>> {
    if n_points < 1000 {
        return Err(EnsError::InvalidArgument(format!("need at least 1000 radii, got {n_points}")));
    }
    if !(r_max >= T::lit(20.0)) || !r_max.is_finite() {
        return Err(EnsError::InvalidArgument(format!("r_max must be >= 20, got {r_max}")));
    }
    if !beta.is_finite() {
        return Err(EnsError::InvalidArgument("beta must be finite".into()));
    }
    let h = r_max / T::from_usize_lossy(n_points - 1);
    let r: Vec<T> = (0..n_points).map(|j| T::from_usize_lossy(j) * h).collect();
    let coef = beta / T::TAU();

    let mut log_w = Vec::with_capacity(n_points);
    let mut integral = T::zero();
    log_w.push(T::zero());
    for j in 1..n_points {
        integral += gauss_legendre(r[j - 1], r[j], log_integrand);
        log_w.push(-r[j] * r[j] / T::lit(4.0) + coef * integral);
    }
    if log_w.iter().any(|v| !v.is_finite()) {
        return Err(EnsError::ProfileUnresolved(format!(
            "log-profile overflowed for beta = {beta}"
        )));
    }
    let peak = log_w.iter().copied().fold(T::neg_infinity(), T::max);
    for v in &mut log_w {
        *v -= peak;
    }
    let tail = log_w[n_points - 1].exp();
    if !(tail <= T::lit(TAIL_LIMIT)) {
        return Err(EnsError::ProfileUnresolved(format!(
            "W_s(r_max) / max W_s = {:e} exceeds {TAIL_LIMIT:e}; increase r_max or reduce |beta|",
            tail.as_f64()
        )));
    }

    // Mass by Hermite-corrected trapezoid on f = 2 pi r w, f' = 2 pi w (1 + r g).
    let w_unnorm: Vec<T> = log_w.iter().map(|v| v.exp()).collect();
    let f: Vec<T> = r.iter().zip(&w_unnorm).map(|(&ri, &wi)| T::TAU() * ri * wi).collect();
    let fp: Vec<T> = r
        .iter()
        .zip(&w_unnorm)
        .map(|(&ri, &wi)| T::TAU() * wi * (T::one() + ri * log_slope(beta, ri)))
        .collect();
    let mut cumulative = Vec::with_capacity(n_points);
    cumulative.push(T::zero());
    let mut acc = T::zero();
    for j in 1..n_points {
        acc += h / T::lit(2.0) * (f[j - 1] + f[j]) + h * h / T::lit(12.0) * (fp[j - 1] - fp[j]);
        cumulative.push(acc);
    }
    let total = acc;
    if !(total > T::zero()) || !total.is_finite() {
        return Err(EnsError::ProfileUnresolved(format!("profile mass {total} not representable")));
    }
    let log_total = total.ln();
    let log_w: Vec<T> = log_w.into_iter().map(|v| v - log_total).collect();
    let w: Vec<T> = log_w.iter().map(|v| v.exp()).collect();
    if w.iter().any(|&v| !(v > T::zero()) || !v.is_normal()) {
        return Err(EnsError::ProfileUnresolved(format!(
            "profile underflows the scalar type for beta = {beta}, r_max = {r_max}"
        )));
    }
    let cumulative_mass = cumulative.into_iter().map(|m| m / total).collect();
    let slope = r.iter().map(|&ri| log_slope(beta, ri)).collect();
    Ok(RadialProfile { beta, h, r, log_w, slope, w, cumulative_mass })
}

/// [`solve_ws`] with the default radius range and resolution.
pub fn solve_ws_default<T: Real>(beta: T) -> Result<RadialProfile<T>> {
    solve_ws(beta, T::lit(DEFAULT_R_MAX), DEFAULT_POINTS)
}

impl<T: Real> RadialProfile<T> {
    pub fn beta(&self) -> T {
        self.beta
    }

    pub fn spacing(&self) -> T {
        self.h
    }

    pub fn r_max(&self) -> T {
        self.r[self.r.len() - 1]
    }

    pub fn radii(&self) -> &[T] {
        &self.r
    }

    pub fn values(&self) -> &[T] {
        &self.w
    }

    pub fn cumulative_mass(&self) -> &[T] {
        &self.cumulative_mass
    }

    fn locate(&self, r: T) -> (usize, T) {
        let last = self.r.len() - 1;
        let pos = (r / self.h).floor().to_usize().unwrap_or(last).min(last - 1);
        (pos, r - self.r[pos])
    }

    /// `ln W_s(r)` by cubic Hermite interpolation of the log-profile.
    pub fn log_value_at(&self, r: T) -> Result<T> {
        let r = r.abs();
        if r > self.r_max() {
            return Err(EnsError::ProfileRange { r: r.as_f64(), r_max: self.r_max().as_f64() });
        }
        let (j, s) = self.locate(r);
        Ok(hermite(self.log_w[j], self.log_w[j + 1], self.slope[j], self.slope[j + 1], self.h, s))
    }

    pub fn value_at(&self, r: T) -> Result<T> {
        self.log_value_at(r).map(T::exp)
    }

    /// `2 pi int_0^r W_s s ds`; the total mass for `r >= r_max`.
    ///
    /// Cubic Hermite in the enclosed mass, except on the first few cells
    /// where the partial cell is integrated directly.
    pub fn mass_within(&self, r: T) -> T {
        let r = r.abs();
        if r >= self.r_max() {
            return self.cumulative_mass[self.r.len() - 1];
        }
        let (j, s) = self.locate(r);
        if j >= QUADRATURE_NODES {
            let d0 = T::TAU() * self.r[j] * self.w[j];
            let d1 = T::TAU() * self.r[j + 1] * self.w[j + 1];
            let (m0, m1) = (self.cumulative_mass[j], self.cumulative_mass[j + 1]);
            return hermite(m0, m1, d0, d1, self.h, s);
        }
        let partial = gauss_legendre(self.r[j], r, |x| {
            T::TAU() * x * self.log_value_at(x).map(T::exp).unwrap_or(T::zero())
        });
        self.cumulative_mass[j] + partial
    }

    /// Whether the samples decrease strictly from `r = 0` to `r_max`.
    pub fn is_strictly_decreasing(&self) -> bool {
        self.w.windows(2).all(|p| p[1] < p[0])
    }

    /// Number of interior local maxima among the samples.
    pub fn interior_maxima(&self) -> usize {
        self.w.windows(3).filter(|p| p[1] > p[0] && p[1] >= p[2]).count()
    }

    /// Two-column `r,ws` CSV.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.r.len() * 40);
        out.push_str("r,ws\n");
        for (r, w) in self.r.iter().zip(&self.w) {
            let _ = writeln!(out, "{},{}", r.as_f64(), w.as_f64());
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| EnsError::io(path, e))
    }
}

/// Radius of the maximum of `W_s`, refined by a parabola through the three
/// samples around the discrete argmax.
pub fn ws_max_location<T: Real>(profile: &RadialProfile<T>) -> T {
    let w = profile.values();
    let j = w
        .iter()
        .enumerate()
        .fold((0, T::neg_infinity()), |(bj, bv), (k, &v)| if v > bv { (k, v) } else { (bj, bv) })
        .0;
    if j == 0 || j + 1 >= w.len() {
        return profile.radii()[j];
    }
    let (a, b, c) = (w[j - 1], w[j], w[j + 1]);
    let denom = a - T::lit(2.0) * b + c;
    let offset = if denom < T::zero() { (a - c) / (T::lit(2.0) * denom) } else { T::zero() };
    profile.radii()[j] + offset * profile.spacing()
}

fn max_grid_radius<T: Real>(grid: &GridSpec<T>) -> T {
    let c = grid.coord(0).abs();
    (c * c + c * c).sqrt()
}

/// `W_s(|x|)` sampled on the grid.
pub fn ws_field<T: Real>(profile: &RadialProfile<T>, grid: &Arc<GridSpec<T>>) -> Result<ScalarField<T>> {
    scaled_ws_field(profile, T::one(), T::one(), grid)
}

/// `alpha (1/t) W_s(x / sqrt t)` sampled on the grid.
pub fn scaled_ws_field<T: Real>(
    profile: &RadialProfile<T>,
    alpha: T,
    t: T,
    grid: &Arc<GridSpec<T>>,
) -> Result<ScalarField<T>> {
    if !(t > T::zero()) {
        return Err(EnsError::NonPositiveTime(t.as_f64()));
    }
    let s = t.sqrt();
    let reach = max_grid_radius(grid) / s;
    if reach > profile.r_max() {
        return Err(EnsError::ProfileRange { r: reach.as_f64(), r_max: profile.r_max().as_f64() });
    }
    let mut err = None;
    let f = ScalarField::from_fn(grid, |x1, x2| {
        let rho = (x1 * x1 + x2 * x2).sqrt() / s;
        match profile.log_value_at(rho) {
            Ok(lw) => alpha * lw.exp() / t,
            Err(e) => {
                err.get_or_insert(e);
                T::zero()
            }
        }
    });
    match err {
        Some(e) => Err(e),
        None => Ok(f),
    }
}

/// The radially symmetric self-similar pair
/// `(alpha (1/t) W_s(x/sqrt t), (beta/t) G(x/sqrt t))`.
pub fn tilde_pair<T: Real>(
    alpha: T,
    beta: T,
    t: T,
    grid: &Arc<GridSpec<T>>,
) -> Result<(ScalarField<T>, ScalarField<T>)> {
    let profile = solve_ws_default(beta)?;
    tilde_pair_with(&profile, alpha, t, grid)
}

/// [`tilde_pair`] reusing an already solved profile (its `beta` is used).
pub fn tilde_pair_with<T: Real>(
    profile: &RadialProfile<T>,
    alpha: T,
    t: T,
    grid: &Arc<GridSpec<T>>,
) -> Result<(ScalarField<T>, ScalarField<T>)> {
    let omega = scaled_ws_field(profile, alpha, t, grid)?;
    let beta = profile.beta();
    let d = ScalarField::from_fn(grid, |x1, x2| beta * heat_kernel(x1, x2, t));
    Ok((omega, d))
}

/// Sup norm of the self-similar right side `L W - div(U W)` at
/// `W = W_s` with `D = beta G`, `U` the matching background velocity.
pub fn steady_residual<T: Real>(profile: &RadialProfile<T>, grid: &Arc<GridSpec<T>>) -> Result<T> {
    let w = ws_field(profile, grid)?;
    let u = Background::new(T::one(), Arc::new(profile.clone())).velocity(T::one(), grid)?;
    let f1 = Spectrum::forward(&u.u1.mul(&w)?).derivative(Axis::X1);
    let f2 = Spectrum::forward(&u.u2.mul(&w)?).derivative(Axis::X2);
    let div = f1.add(&f2)?.inverse();
    Ok(apply_L(&w)?.sub(&div)?.max_abs())
}

/// `||W_s - G||_w` on the default `256 x 256`, `L = 40` grid.
pub fn ws_minus_g_norm<T: Real>(beta: T) -> Result<T> {
    if beta.abs() > T::lit(4.0) * T::PI() {
        return Err(EnsError::InvalidArgument(format!(
            "|beta| must be <= 4 pi for the small-beta diagnostic, got {beta}"
        )));
    }
    let grid = make_grid(256, T::lit(40.0))?;
    let profile = solve_ws_default(beta)?;
    let ws = ws_field(&profile, &grid)?;
    let diff = ws.map_with_position(|x1, x2, v| v - gaussian(x1, x2));
    weighted_w_norm_scaled(&diff, ws.max_abs())
}
