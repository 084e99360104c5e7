use std::sync::Arc;

use crate::error::{EnsError, Result};
use crate::real::Real;

use super::grid::GridSpec;

/// Real samples of a scalar field on a [`GridSpec`].
#[derive(Clone, Debug)]
pub struct ScalarField<T: Real> {
    grid: Arc<GridSpec<T>>,
    values: Vec<T>,
}

impl<T: Real> ScalarField<T> {
    pub fn zeros(grid: &Arc<GridSpec<T>>) -> Self {
        Self { grid: grid.clone(), values: vec![T::zero(); grid.len()] }
    }

    pub fn from_values(grid: &Arc<GridSpec<T>>, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(EnsError::InvalidArgument(format!(
                "expected {} samples, got {}",
                grid.len(),
                values.len()
            )));
        }
        Ok(Self { grid: grid.clone(), values })
    }

    /// Samples `f(x1, x2)` at every grid point.
    pub fn from_fn(grid: &Arc<GridSpec<T>>, mut f: impl FnMut(T, T) -> T) -> Self {
        let n = grid.n();
        let mut values = Vec::with_capacity(grid.len());
        for j in 0..n {
            let x2 = grid.coord(j);
            for i in 0..n {
                values.push(f(grid.coord(i), x2));
            }
        }
        Self { grid: grid.clone(), values }
    }

    pub fn grid(&self) -> &Arc<GridSpec<T>> {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn at(&self, i: usize, j: usize) -> T {
        self.values[j * self.grid.n() + i]
    }

    /// Same values relabelled onto another grid with identical `n`.
    pub fn with_grid(self, grid: &Arc<GridSpec<T>>) -> Result<Self> {
        if grid.n() != self.grid.n() {
            return Err(EnsError::GridMismatch);
        }
        Ok(Self { grid: grid.clone(), values: self.values })
    }

    pub fn check_same_grid(&self, other: &Self) -> Result<()> {
        if self.grid.same_as(&other.grid) {
            Ok(())
        } else {
            Err(EnsError::GridMismatch)
        }
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    pub fn max(&self) -> T {
        self.values.iter().copied().fold(T::neg_infinity(), T::max)
    }

    pub fn min(&self) -> T {
        self.values.iter().copied().fold(T::infinity(), T::min)
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self { grid: self.grid.clone(), values: self.values.iter().map(|&v| f(v)).collect() }
    }

    /// Pointwise combination, position-aware.
    pub fn map_with_position(&self, f: impl Fn(T, T, T) -> T) -> Self {
        let n = self.grid.n();
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(idx, &v)| f(self.grid.coord(idx % n), self.grid.coord(idx / n), v))
            .collect();
        Self { grid: self.grid.clone(), values }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(T, T) -> T) -> Result<Self> {
        self.check_same_grid(other)?;
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Ok(Self { grid: self.grid.clone(), values })
    }

    pub fn scale(&self, c: T) -> Self {
        self.map(|v| v * c)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.zip_map(other, |a, b| a * b)
    }

    /// `self + c * other`
    pub fn axpy(&self, c: T, other: &Self) -> Result<Self> {
        self.zip_map(other, |a, b| a + c * b)
    }

    /// Half-turn reflection `f(-x)`; the grid maps onto itself.
    pub fn reflected(&self) -> Self {
        let n = self.grid.n();
        let mut values = vec![T::zero(); self.values.len()];
        for j in 0..n {
            for i in 0..n {
                values[j * n + i] = self.values[((n - j) % n) * n + (n - i) % n];
            }
        }
        Self { grid: self.grid.clone(), values }
    }

    /// Quarter-turn rotation `f(R x)` with `R(x1, x2) = (-x2, x1)`.
    pub fn rotated(&self) -> Self {
        let n = self.grid.n();
        let mut values = vec![T::zero(); self.values.len()];
        for j in 0..n {
            for i in 0..n {
                // R maps index (i, j) to (n - j, i) modulo n.
                values[j * n + i] = self.values[i * n + (n - j) % n];
            }
        }
        Self { grid: self.grid.clone(), values }
    }
}
