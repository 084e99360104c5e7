use std::fmt;
use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use crate::error::{EnsError, Result};
use crate::real::Real;

/// Uniform periodic `n x n` grid on the square `[-L/2, L/2)^2`.
///
/// Sample `(i, j)` sits at `x1 = (i - n/2) dx`, `x2 = (j - n/2) dx`, so the
/// origin is the sample `(n/2, n/2)`. Storage is row-major with `x1`
/// varying fastest: `values[j * n + i]`.
pub struct GridSpec<T: Real> {
    n: usize,
    box_len: T,
    dx: T,
    coords: Vec<T>,
    wavenumbers: Vec<T>,
    modes: Vec<i64>,
    keep: Vec<bool>,
    pub(crate) forward: Arc<dyn Fft<T>>,
    pub(crate) inverse: Arc<dyn Fft<T>>,
}

/// Builds the grid of `n` points per axis on a box of side `box_len`.
pub fn make_grid<T: Real>(n: usize, box_len: T) -> Result<Arc<GridSpec<T>>> {
    GridSpec::new(n, box_len).map(Arc::new)
}

impl<T: Real> GridSpec<T> {
    pub fn new(n: usize, box_len: T) -> Result<Self> {
        if n < 16 || n % 2 != 0 {
            return Err(EnsError::InvalidGrid(format!(
                "n must be even and at least 16, got {n}"
            )));
        }
        if !(box_len > T::zero()) || !box_len.is_finite() {
            return Err(EnsError::InvalidGrid(format!(
                "box length must be positive, got {box_len}"
            )));
        }
        let nf = T::from_usize_lossy(n);
        let dx = box_len / nf;
        let half = (n / 2) as i64;
        let coords = (0..n)
            .map(|i| T::lit((i as i64 - half) as f64) * dx)
            .collect();
        let modes: Vec<i64> = (0..n)
            .map(|q| if q as i64 <= half { q as i64 } else { q as i64 - n as i64 })
            .collect();
        let base = T::TAU() / box_len;
        let wavenumbers = modes.iter().map(|&m| base * T::lit(m as f64)).collect();
        // 2/3 rule: |m| < n/3, i.e. 3|m| < n.
        let keep = modes.iter().map(|&m| 3 * m.unsigned_abs() < n as u64).collect();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        Ok(Self { n, box_len, dx, coords, wavenumbers, modes, keep, forward, inverse })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn box_len(&self) -> T {
        self.box_len
    }

    pub fn dx(&self) -> T {
        self.dx
    }

    /// Cell area `dx^2`, the rectangle-rule quadrature weight.
    pub fn cell_area(&self) -> T {
        self.dx * self.dx
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Coordinate of sample index `i` along either axis.
    pub fn coord(&self, i: usize) -> T {
        self.coords[i]
    }

    pub fn coords(&self) -> &[T] {
        &self.coords
    }

    /// Index of the origin along each axis.
    pub fn origin_index(&self) -> usize {
        self.n / 2
    }

    /// Physical position of the flat index `idx`.
    pub fn position(&self, idx: usize) -> (T, T) {
        (self.coords[idx % self.n], self.coords[idx / self.n])
    }

    /// Angular wavenumber of FFT index `q`.
    pub fn wavenumber(&self, q: usize) -> T {
        self.wavenumbers[q]
    }

    pub fn wavenumbers(&self) -> &[T] {
        &self.wavenumbers
    }

    /// Signed mode number of FFT index `q`, in `(-n/2, n/2]`.
    pub fn mode(&self, q: usize) -> i64 {
        self.modes[q]
    }

    /// Whether FFT index `q` is the Nyquist mode `n/2`.
    pub fn is_nyquist(&self, q: usize) -> bool {
        q == self.n / 2
    }

    /// Whether the 2D mode `(q1, q2)` survives 2/3-rule dealiasing.
    pub fn dealias_keep(&self, q1: usize, q2: usize) -> bool {
        self.keep[q1] && self.keep[q2]
    }

    /// Largest retained `|m|` per axis.
    pub fn dealias_cutoff(&self) -> i64 {
        self.modes
            .iter()
            .zip(&self.keep)
            .filter(|(_, &k)| k)
            .map(|(m, _)| m.abs())
            .max()
            .unwrap_or(0)
    }

    /// Two grids are interchangeable when size and box agree exactly.
    pub fn same_as(&self, other: &GridSpec<T>) -> bool {
        self.n == other.n && self.box_len == other.box_len
    }

    /// The same sample layout on a box scaled by `factor`.
    pub fn scaled(&self, factor: T) -> Result<Arc<GridSpec<T>>> {
        make_grid(self.n, self.box_len * factor)
    }
}

impl<T: Real> fmt::Debug for GridSpec<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GridSpec")
            .field("n", &self.n)
            .field("box_len", &self.box_len)
            .field("dx", &self.dx)
            .finish()
    }
}
