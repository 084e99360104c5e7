//! Velocity reconstruction from vorticity and divergence.
//!
//! Periodic spectral inverses only see mean-zero data. Any nonzero mass is
//! carried by the radial self-similar backgrounds, whose velocities are known
//! in closed form and evaluated pointwise.

use std::sync::Arc;

use rustfft::num_complex::Complex;

use crate::error::{EnsError, Result};
use crate::fields::SimState;
use crate::profiles::{tilde_pair_with, RadialProfile};
use crate::real::{one_minus_exp_over, Real};
use crate::spectral::{grid_integral, grid_l1, Axis, GridSpec, ScalarField, Spectrum};

/// Relative mean tolerance for the periodic inverses.
pub const RESIDUAL_MEAN_TOL: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct VelocityField<T: Real> {
    pub u1: ScalarField<T>,
    pub u2: ScalarField<T>,
}

impl<T: Real> VelocityField<T> {
    pub fn new(u1: ScalarField<T>, u2: ScalarField<T>) -> Result<Self> {
        u1.check_same_grid(&u2)?;
        Ok(Self { u1, u2 })
    }

    pub fn zeros(grid: &Arc<GridSpec<T>>) -> Self {
        Self { u1: ScalarField::zeros(grid), u2: ScalarField::zeros(grid) }
    }

    pub fn grid(&self) -> &Arc<GridSpec<T>> {
        self.u1.grid()
    }

    pub fn is_finite(&self) -> bool {
        self.u1.is_finite() && self.u2.is_finite()
    }

    /// `max |u|` over the grid.
    pub fn max_speed(&self) -> T {
        self.u1
            .values()
            .iter()
            .zip(self.u2.values())
            .map(|(a, b)| (*a * *a + *b * *b).sqrt())
            .fold(T::zero(), T::max)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        Ok(Self { u1: self.u1.add(&other.u1)?, u2: self.u2.add(&other.u2)? })
    }

    pub fn scale(&self, c: T) -> Self {
        Self { u1: self.u1.scale(c), u2: self.u2.scale(c) }
    }

    /// Spectral `d1 u1 + d2 u2`.
    pub fn divergence(&self) -> ScalarField<T> {
        let a = Spectrum::forward(&self.u1).derivative(Axis::X1);
        let b = Spectrum::forward(&self.u2).derivative(Axis::X2);
        a.add(&b).expect("components share a grid").inverse()
    }

    /// Spectral `d1 u2 - d2 u1`.
    pub fn curl(&self) -> ScalarField<T> {
        let a = Spectrum::forward(&self.u2).derivative(Axis::X1);
        let mut b = Spectrum::forward(&self.u1).derivative(Axis::X2);
        for c in b.coeffs_mut() {
            *c = -*c;
        }
        a.add(&b).expect("components share a grid").inverse()
    }
}

fn check_mean<T: Real>(f: &ScalarField<T>) -> Result<()> {
    let mean = grid_integral(f);
    let tol = T::lit(RESIDUAL_MEAN_TOL) * grid_l1(f).max(T::one());
    if mean.abs() > tol || !mean.is_finite() {
        return Err(EnsError::NonZeroMean { mean: mean.as_f64(), tol: tol.as_f64() });
    }
    Ok(())
}

fn spectral_pair<T: Real>(
    f: &ScalarField<T>,
    m1: impl Fn(T, T) -> Complex<T>,
    m2: impl Fn(T, T) -> Complex<T>,
) -> VelocityField<T> {
    let grid = f.grid().clone();
    let s = Spectrum::forward(f);
    let zero = Complex::new(T::zero(), T::zero());
    let make = |m: &dyn Fn(T, T) -> Complex<T>| {
        s.apply(|q1, q2, k1, k2| {
            if (q1 == 0 && q2 == 0) || grid.is_nyquist(q1) || grid.is_nyquist(q2) {
                zero
            } else {
                m(k1, k2) / (k1 * k1 + k2 * k2)
            }
        })
        .inverse()
    };
    VelocityField { u1: make(&m1), u2: make(&m2) }
}

/// Periodic Biot-Savart law: the divergence-free `u` with `curl u = omega`.
///
/// `u_hat = -i k_perp omega_hat / |k|^2` with `k_perp = (-k2, k1)`.
pub fn biot_savart<T: Real>(omega: &ScalarField<T>) -> Result<VelocityField<T>> {
    check_mean(omega)?;
    Ok(spectral_pair(
        omega,
        |_, k2| Complex::new(T::zero(), k2),
        |k1, _| Complex::new(T::zero(), -k1),
    ))
}

/// Periodic `grad Delta^{-1}`: the curl-free `u` with `div u = d`.
pub fn grad_inverse<T: Real>(d: &ScalarField<T>) -> Result<VelocityField<T>> {
    check_mean(d)?;
    Ok(spectral_pair(
        d,
        |k1, _| Complex::new(T::zero(), -k1),
        |_, k2| Complex::new(T::zero(), -k2),
    ))
}

/// Speed `(mass / 2 pi r)(1 - e^{-r^2/4t})` induced by a Gaussian of total
/// `mass` at heat time `t`. Azimuthal for vorticity, radial for divergence.
pub fn radial_velocity<T: Real>(mass: T, t: T, r: T) -> T {
    let x = r * r / (T::lit(4.0) * t);
    mass * r / (T::lit(8.0) * T::PI() * t) * one_minus_exp_over(x)
}

/// Radial background `alpha * omega_tilde_beta`, `beta * G_t` of a split.
#[derive(Clone, Debug)]
pub struct Background<T: Real> {
    pub alpha: T,
    pub beta: T,
    pub profile: Arc<RadialProfile<T>>,
}

impl<T: Real> Background<T> {
    /// Uses the profile's `beta`.
    pub fn new(alpha: T, profile: Arc<RadialProfile<T>>) -> Self {
        Self { alpha, beta: profile.beta(), profile }
    }

    /// Gridded background pair at time `t`.
    pub fn fields(&self, t: T, grid: &Arc<GridSpec<T>>) -> Result<(ScalarField<T>, ScalarField<T>)> {
        tilde_pair_with(&self.profile, self.alpha, t, grid)
    }

    /// Closed-form background velocity at `(x1, x2)` and time `t > 0`.
    pub fn velocity_at(&self, t: T, x1: T, x2: T) -> (T, T) {
        let s = t.sqrt();
        let r = (x1 * x1 + x2 * x2).sqrt();
        // azimuthal speed over r
        let az = if r < T::lit(1e-6) * s {
            self.alpha * self.profile.values()[0] / (T::lit(2.0) * t)
        } else {
            self.alpha * self.profile.mass_within(r / s) / (T::TAU() * r * r)
        };
        let rad = self.beta / (T::lit(8.0) * T::PI() * t) * one_minus_exp_over(r * r / (T::lit(4.0) * t));
        (-az * x2 + rad * x1, az * x1 + rad * x2)
    }

    /// Closed-form background velocity sampled on the grid.
    pub fn velocity(&self, t: T, grid: &Arc<GridSpec<T>>) -> Result<VelocityField<T>> {
        if !(t > T::zero()) {
            return Err(EnsError::NonPositiveTime(t.as_f64()));
        }
        let n = grid.n();
        let mut u1 = vec![T::zero(); grid.len()];
        let mut u2 = vec![T::zero(); grid.len()];
        for j in 0..n {
            let x2 = grid.coord(j);
            for i in 0..n {
                let (a, b) = self.velocity_at(t, grid.coord(i), x2);
                u1[j * n + i] = a;
                u2[j * n + i] = b;
            }
        }
        VelocityField::new(ScalarField::from_values(grid, u1)?, ScalarField::from_values(grid, u2)?)
    }
}

/// Combined spectral image `K_BS * w + grad Delta^{-1} d` of mean-zero
/// spectra, with two inverse transforms.
pub(crate) fn velocity_from_spectra<T: Real>(w: &Spectrum<T>, d: &Spectrum<T>) -> VelocityField<T> {
    let grid = w.grid().clone();
    let n = grid.n();
    let ks = grid.wavenumbers();
    let zero = Complex::new(T::zero(), T::zero());
    let mut u1 = Spectrum::zeros(&grid);
    let mut u2 = Spectrum::zeros(&grid);
    let (wc, dc) = (w.coeffs(), d.coeffs());
    let (c1, c2) = (u1.coeffs_mut(), u2.coeffs_mut());
    for q2 in 0..n {
        for q1 in 0..n {
            let idx = q2 * n + q1;
            if (q1 == 0 && q2 == 0) || grid.is_nyquist(q1) || grid.is_nyquist(q2) {
                c1[idx] = zero;
                continue;
            }
            let (k1, k2) = (ks[q1], ks[q2]);
            let inv = T::one() / (k1 * k1 + k2 * k2);
            // i k2 w - i k1 d and -i k1 w - i k2 d, over |k|^2
            let (a, b) = (wc[idx], dc[idx]);
            c1[idx] = Complex::new(-(k2 * a.im) + k1 * b.im, k2 * a.re - k1 * b.re) * inv;
            c2[idx] = Complex::new(k1 * a.im + k2 * b.im, -(k1 * a.re) - k2 * b.re) * inv;
        }
    }
    VelocityField { u1: u1.inverse(), u2: u2.inverse() }
}

/// Spectrum of `f - background`, checking that the difference has no mass.
pub(crate) fn residual_spectrum<T: Real>(
    f: &Spectrum<T>,
    background: &Spectrum<T>,
    l1_scale: T,
) -> Result<Spectrum<T>> {
    let mut out = f.clone();
    for (c, b) in out.coeffs_mut().iter_mut().zip(background.coeffs()) {
        *c = *c - *b;
    }
    let grid = f.grid();
    let mean = out.mean_mode().re * grid.cell_area();
    let tol = T::lit(RESIDUAL_MEAN_TOL) * l1_scale.max(T::one());
    if mean.abs() > tol || !mean.is_finite() {
        return Err(EnsError::NonZeroMean { mean: mean.as_f64(), tol: tol.as_f64() });
    }
    Ok(out)
}

fn with_grid_mass<T: Real>(f: ScalarField<T>, mass: T) -> ScalarField<T> {
    let current = grid_integral(&f);
    if current == T::zero() || mass == T::zero() {
        f
    } else {
        f.scale(mass / current)
    }
}

/// Background fields and velocity at one time, ready for repeated use.
#[derive(Clone, Debug)]
pub(crate) struct BackgroundParts<T: Real> {
    omega_hat: Spectrum<T>,
    d_hat: Spectrum<T>,
    velocity: VelocityField<T>,
    l1_scale: T,
}

impl<T: Real> BackgroundParts<T> {
    pub(crate) fn new(background: &Background<T>, t: T, grid: &Arc<GridSpec<T>>) -> Result<Self> {
        let (w_bg, d_bg) = background.fields(t, grid)?;
        Ok(Self {
            omega_hat: Spectrum::forward(&with_grid_mass(w_bg, background.alpha)),
            d_hat: Spectrum::forward(&with_grid_mass(d_bg, background.beta)),
            velocity: background.velocity(t, grid)?,
            l1_scale: background.alpha.abs() + background.beta.abs(),
        })
    }

    /// Velocity of fields with spectra `omega_hat`, `d_hat` at this time.
    pub(crate) fn velocity_of(&self, omega_hat: &Spectrum<T>, d_hat: &Spectrum<T>) -> Result<VelocityField<T>> {
        let w_res = residual_spectrum(omega_hat, &self.omega_hat, self.l1_scale)?;
        let d_res = residual_spectrum(d_hat, &self.d_hat, self.l1_scale)?;
        self.velocity.add(&velocity_from_spectra(&w_res, &d_res))
    }
}

/// Full velocity of a state: closed-form background plus the spectral image
/// of the mean-zero residuals `omega - alpha omega_tilde`, `d - beta G_t`.
pub fn reconstruct_velocity<T: Real>(
    state: &SimState<T>,
    background: &Background<T>,
) -> Result<VelocityField<T>> {
    if !state.omega.is_finite() || !state.d.is_finite() {
        return Err(EnsError::BlowUp { t: state.t.as_f64(), reason: "non-finite state".into() });
    }
    BackgroundParts::new(background, state.t, state.grid())?
        .velocity_of(&Spectrum::forward(&state.omega), &Spectrum::forward(&state.d))
}
