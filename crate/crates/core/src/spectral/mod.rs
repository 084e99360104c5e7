//! Periodic grid, Fourier-space differential operators, Poisson inversion
//! and 2/3-rule dealiasing.
//!
//! The unbounded plane is approximated by a periodic box. Everything here is
//! a pure function of its inputs; FFT plans live on the shared [`GridSpec`]
//! and are safe to use from several threads.

mod field;
mod grid;
mod transform;

pub use field::ScalarField;
pub use grid::{make_grid, GridSpec};
pub use transform::{
    dealias, derivative, gradient, grid_integral, grid_l1, laplacian, parseval_pair,
    poisson_inverse, Axis, Spectrum,
};
