use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::Fft;

use crate::error::{EnsError, Result};
use crate::real::Real;

use super::field::ScalarField;
use super::grid::GridSpec;

/// Spatial direction of a derivative.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    X1,
    X2,
}

/// Unnormalized 2D DFT coefficients of a field, in the same `[q2 * n + q1]`
/// layout as the samples.
#[derive(Clone, Debug)]
pub struct Spectrum<T: Real> {
    grid: Arc<GridSpec<T>>,
    coeffs: Vec<Complex<T>>,
}

fn fft_rows<T: Real>(fft: &Arc<dyn Fft<T>>, buf: &mut [Complex<T>], scratch: &mut Vec<Complex<T>>) {
    let need = fft.get_inplace_scratch_len();
    if scratch.len() < need {
        scratch.resize(need, Complex::new(T::zero(), T::zero()));
    }
    fft.process_with_scratch(buf, &mut scratch[..need]);
}

fn transpose<T: Copy>(src: &[T], dst: &mut [T], n: usize) {
    const BLOCK: usize = 32;
    for jb in (0..n).step_by(BLOCK) {
        for ib in (0..n).step_by(BLOCK) {
            for j in jb..(jb + BLOCK).min(n) {
                for i in ib..(ib + BLOCK).min(n) {
                    dst[i * n + j] = src[j * n + i];
                }
            }
        }
    }
}

fn fft2_in_place<T: Real>(fft: &Arc<dyn Fft<T>>, n: usize, buf: &mut Vec<Complex<T>>) {
    let mut scratch = Vec::new();
    fft_rows(fft, buf, &mut scratch);
    let mut tmp = vec![Complex::new(T::zero(), T::zero()); buf.len()];
    transpose(buf, &mut tmp, n);
    fft_rows(fft, &mut tmp, &mut scratch);
    transpose(&tmp, buf, n);
}

impl<T: Real> Spectrum<T> {
    pub fn zeros(grid: &Arc<GridSpec<T>>) -> Self {
        Self { grid: grid.clone(), coeffs: vec![Complex::new(T::zero(), T::zero()); grid.len()] }
    }

    pub fn forward(f: &ScalarField<T>) -> Self {
        let grid = f.grid().clone();
        let mut coeffs: Vec<Complex<T>> =
            f.values().iter().map(|&v| Complex::new(v, T::zero())).collect();
        fft2_in_place(&grid.forward, grid.n(), &mut coeffs);
        Self { grid, coeffs }
    }

    /// Inverse transform; the imaginary residue is discarded.
    pub fn inverse(&self) -> ScalarField<T> {
        let n = self.grid.n();
        let mut buf = self.coeffs.clone();
        fft2_in_place(&self.grid.inverse, n, &mut buf);
        let norm = T::one() / T::from_usize_lossy(n * n);
        let values = buf.into_iter().map(|c| c.re * norm).collect();
        ScalarField::from_values(&self.grid, values).expect("inverse transform preserves size")
    }

    pub fn grid(&self) -> &Arc<GridSpec<T>> {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex<T>] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex<T>] {
        &mut self.coeffs
    }

    /// Multiplies mode `(q1, q2)` by `m(q1, q2, k1, k2)`.
    pub fn apply(&self, m: impl Fn(usize, usize, T, T) -> Complex<T>) -> Self {
        let n = self.grid.n();
        let ks = self.grid.wavenumbers();
        let mut coeffs = self.coeffs.clone();
        for q2 in 0..n {
            for q1 in 0..n {
                let idx = q2 * n + q1;
                coeffs[idx] = coeffs[idx] * m(q1, q2, ks[q1], ks[q2]);
            }
        }
        Self { grid: self.grid.clone(), coeffs }
    }

    /// Real multiplier, applied in place.
    pub fn scale_modes(&mut self, m: impl Fn(T, T) -> T) {
        let n = self.grid.n();
        let ks = self.grid.wavenumbers();
        for q2 in 0..n {
            for q1 in 0..n {
                self.coeffs[q2 * n + q1] = self.coeffs[q2 * n + q1] * m(ks[q1], ks[q2]);
            }
        }
    }

    /// Spectral `d/dx_axis`; the Nyquist mode of the differentiated axis is
    /// dropped so the result stays real.
    pub fn derivative(&self, axis: Axis) -> Self {
        let grid = self.grid.clone();
        self.apply(|q1, q2, k1, k2| {
            let (q, k) = match axis {
                Axis::X1 => (q1, k1),
                Axis::X2 => (q2, k2),
            };
            if grid.is_nyquist(q) {
                Complex::new(T::zero(), T::zero())
            } else {
                Complex::new(T::zero(), k)
            }
        })
    }

    pub fn laplacian(&self) -> Self {
        self.apply(|_, _, k1, k2| Complex::new(-(k1 * k1 + k2 * k2), T::zero()))
    }

    pub fn dealiased(&self) -> Self {
        let mut out = self.clone();
        out.dealias_in_place();
        out
    }

    pub fn dealias_in_place(&mut self) {
        let n = self.grid.n();
        let zero = Complex::new(T::zero(), T::zero());
        for q2 in 0..n {
            for q1 in 0..n {
                if !self.grid.dealias_keep(q1, q2) {
                    self.coeffs[q2 * n + q1] = zero;
                }
            }
        }
    }

    /// `Delta^{-1}` on the mean-zero subspace; the `k = 0` mode is set to zero.
    pub fn inverse_laplacian(&self) -> Self {
        self.apply(|q1, q2, k1, k2| {
            if q1 == 0 && q2 == 0 {
                Complex::new(T::zero(), T::zero())
            } else {
                Complex::new(-T::one() / (k1 * k1 + k2 * k2), T::zero())
            }
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if !self.grid.same_as(&other.grid) {
            return Err(EnsError::GridMismatch);
        }
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect();
        Ok(Self { grid: self.grid.clone(), coeffs })
    }

    pub fn mean_mode(&self) -> Complex<T> {
        self.coeffs[0]
    }

    /// Fourier-side energy `(dx^2 / n^2) sum |f_hat|^2`, equal to `int f^2`
    /// on the grid by Parseval.
    pub fn energy(&self) -> T {
        let n2 = T::from_usize_lossy(self.grid.len());
        let s: T = self.coeffs.iter().map(|c| c.norm_sqr()).sum();
        s * self.grid.cell_area() / n2
    }
}

/// `d f / d x_axis`.
pub fn derivative<T: Real>(f: &ScalarField<T>, axis: Axis) -> ScalarField<T> {
    Spectrum::forward(f).derivative(axis).inverse()
}

pub fn gradient<T: Real>(f: &ScalarField<T>) -> (ScalarField<T>, ScalarField<T>) {
    let s = Spectrum::forward(f);
    (s.derivative(Axis::X1).inverse(), s.derivative(Axis::X2).inverse())
}

pub fn laplacian<T: Real>(f: &ScalarField<T>) -> ScalarField<T> {
    Spectrum::forward(f).laplacian().inverse()
}

/// Zeroes every mode outside the 2/3-rule band.
pub fn dealias<T: Real>(f: &ScalarField<T>) -> ScalarField<T> {
    Spectrum::forward(f).dealiased().inverse()
}

/// Rectangle-rule integral `dx^2 sum f`.
pub fn grid_integral<T: Real>(f: &ScalarField<T>) -> T {
    f.values().iter().copied().sum::<T>() * f.grid().cell_area()
}

pub fn grid_l1<T: Real>(f: &ScalarField<T>) -> T {
    f.values().iter().map(|v| v.abs()).sum::<T>() * f.grid().cell_area()
}

/// Tolerance used when a periodic inversion demands a mean-zero source.
pub(crate) fn strict_mean_tol<T: Real>() -> T {
    T::lit(1e-12).max(T::epsilon() * T::lit(100.0))
}

/// Mean-zero `phi` with `Delta phi = f`.
///
/// Rejects `f` unless `|int f| <= 1e-12 ||f||_1` (the `k = 0` mode must vanish).
pub fn poisson_inverse<T: Real>(f: &ScalarField<T>) -> Result<ScalarField<T>> {
    let mean = grid_integral(f);
    let tol = strict_mean_tol::<T>() * grid_l1(f);
    if mean.abs() > tol {
        return Err(EnsError::NonZeroMean { mean: mean.as_f64(), tol: tol.as_f64() });
    }
    Ok(Spectrum::forward(f).inverse_laplacian().inverse())
}

/// Grid quadrature of `f^2` against its Fourier-side energy.
pub fn parseval_pair<T: Real>(f: &ScalarField<T>) -> (T, T) {
    let physical = f.values().iter().map(|&v| v * v).sum::<T>() * f.grid().cell_area();
    (physical, Spectrum::forward(f).energy())
}
