//! Seeded initial-condition generators.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{EnsError, Result};
use crate::fields::{heat_kernel, mean_integral, weighted_w_norm};
use crate::profiles::{solve_ws_default, tilde_pair_with};
use crate::real::Real;
use crate::spectral::{GridSpec, ScalarField};

pub const GENERATORS: [&str; 3] = ["gaussian-patches", "dipole-divergence", "tilde-plus-noise"];

/// Parameters shared by the generators; each uses the subset it needs.
#[derive(Clone, Debug, PartialEq)]
pub struct IcParams {
    pub alpha: f64,
    pub beta: f64,
    /// Heat time of the Gaussian building blocks.
    pub t0: f64,
    /// Patch centers; the vorticity mass `alpha` is split evenly.
    pub centers: Vec<[f64; 2]>,
    /// Coefficient of the mean-zero dipole `d_1 G_{t0}` added to `d`.
    pub dipole: f64,
    /// Target weighted norm of the vorticity noise in similarity variables.
    pub noise_w: f64,
    /// Target weighted norm of the divergence noise.
    pub noise_d: f64,
}

impl Default for IcParams {
    fn default() -> Self {
        Self { alpha: 1.0, beta: 0.0, t0: 1.0, centers: vec![[0.0, 0.0]], dipole: 0.0, noise_w: 0.0, noise_d: 0.0 }
    }
}

fn check_params(p: &IcParams) -> Result<()> {
    let bad = |m: String| Err(EnsError::InvalidArgument(m));
    if !(p.t0 > 0.0) || !p.t0.is_finite() {
        return bad(format!("t0 must be > 0, got {}", p.t0));
    }
    for v in [p.alpha, p.beta, p.dipole] {
        if !v.is_finite() || v.abs() > 1e3 {
            return bad(format!("amplitude {v} outside [-1e3, 1e3]"));
        }
    }
    for v in [p.noise_w, p.noise_d] {
        if !(0.0..=1.0).contains(&v) {
            return bad(format!("noise size {v} outside [0, 1]"));
        }
    }
    if p.centers.iter().flatten().any(|c| !c.is_finite()) {
        return bad("patch centers must be finite".into());
    }
    Ok(())
}

/// `G_{t0}` normalized so its grid integral is exactly one.
fn unit_gaussian<T: Real>(grid: &Arc<GridSpec<T>>, t0: T) -> ScalarField<T> {
    let g = ScalarField::from_fn(grid, |x1, x2| heat_kernel(x1, x2, t0));
    let m = mean_integral(&g);
    g.scale(T::one() / m)
}

fn patches<T: Real>(grid: &Arc<GridSpec<T>>, p: &IcParams) -> ScalarField<T> {
    if p.centers.is_empty() || p.alpha == 0.0 {
        return ScalarField::zeros(grid);
    }
    let t0 = T::lit(p.t0);
    let w = T::lit(p.alpha / p.centers.len() as f64);
    let centers: Vec<(T, T)> = p.centers.iter().map(|c| (T::lit(c[0]), T::lit(c[1]))).collect();
    ScalarField::from_fn(grid, |x1, x2| centers.iter().map(|&(a, b)| heat_kernel(x1 - a, x2 - b, t0)).sum::<T>() * w)
}

fn divergence<T: Real>(grid: &Arc<GridSpec<T>>, p: &IcParams) -> ScalarField<T> {
    let t0 = T::lit(p.t0);
    let base = unit_gaussian(grid, t0).scale(T::lit(p.beta));
    if p.dipole == 0.0 {
        return base;
    }
    let c = T::lit(p.dipole);
    base.map_with_position(|x1, x2, v| v - c * x1 / (T::lit(2.0) * t0) * heat_kernel(x1, x2, t0))
}

/// Mean-zero `G(xi) P(xi)` with `P` a seeded random polynomial of degree
/// at most 3 (no constant term), scaled to `||.||_w = size`.
pub fn gaussian_noise<T: Real>(grid: &Arc<GridSpec<T>>, size: T, seed: u64) -> Result<ScalarField<T>> {
    if size == T::zero() {
        return Ok(ScalarField::zeros(grid));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut terms = Vec::new();
    for deg in 1..=3 {
        for i in 0..=deg {
            let c: f64 = rng.sample(StandardNormal);
            terms.push((i as i32, (deg - i) as i32, T::lit(c)));
        }
    }
    let raw = ScalarField::from_fn(grid, |x1, x2| {
        let poly: T = terms.iter().map(|&(i, j, c)| c * x1.powi(i) * x2.powi(j)).sum();
        poly * heat_kernel(x1, x2, T::one())
    });
    let g = unit_gaussian(grid, T::one());
    let mean = mean_integral(&raw);
    let f = raw.axpy(-mean, &g)?;
    let norm = weighted_w_norm(&f)?;
    if !(norm > T::zero()) {
        return Err(EnsError::InvalidArgument("degenerate noise sample".into()));
    }
    Ok(f.scale(size / norm))
}

/// Builds `(omega0, d0)` at time `t0`.
///
/// `d0` always integrates to `beta` exactly; the vorticity mass is `alpha`.
pub fn generate_ic<T: Real>(
    name: &str,
    params: &IcParams,
    seed: u64,
    grid: &Arc<GridSpec<T>>,
) -> Result<(ScalarField<T>, ScalarField<T>)> {
    check_params(params)?;
    match name {
        "gaussian-patches" => {
            let p = IcParams { dipole: 0.0, ..params.clone() };
            Ok((patches(grid, &p), divergence(grid, &p)))
        }
        "dipole-divergence" => {
            if params.dipole == 0.0 {
                return Err(EnsError::InvalidArgument("dipole-divergence needs a nonzero dipole".into()));
            }
            Ok((patches(grid, params), divergence(grid, params)))
        }
        "tilde-plus-noise" => {
            let t0 = T::lit(params.t0);
            let profile = solve_ws_default(T::lit(params.beta))?;
            let (w, _) = tilde_pair_with(&profile, T::lit(params.alpha), t0, grid)?;
            // noise is drawn in similarity variables and mapped to x at t0
            let xi = grid.scaled(T::one() / t0.sqrt())?;
            let nw = gaussian_noise(&xi, T::lit(params.noise_w), seed)?;
            let nd = gaussian_noise(&xi, T::lit(params.noise_d), seed ^ 0x9e37_79b9_7f4a_7c15)?;
            let to_x = |f: ScalarField<T>| f.scale(T::one() / t0).with_grid(grid);
            let d_bg = unit_gaussian(grid, t0).scale(T::lit(params.beta));
            Ok((w.add(&to_x(nw)?)?, d_bg.add(&to_x(nd)?)?))
        }
        other => Err(EnsError::InvalidArgument(format!(
            "unknown initial-condition generator '{other}' (expected one of {})",
            GENERATORS.join(", ")
        ))),
    }
}
