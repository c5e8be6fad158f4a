//! Numerical core for the generalized Navier–Stokes equations with fractional
//! dissipation `u_t + u·∇u + (−Δ)^{γ/2} u + ∇p = 0`, `div u = 0`.
//!
//! The crate is `no_std` (with `alloc`) and contains no IO. It provides
//!
//! * [`spectral`]: periodic grids, FFTs, Fourier multipliers, Leray projection
//!   and the dealiased quadratic nonlinearity;
//! * [`kernel`]: the generalized heat kernel `G_γ` and Oseen kernel `K_{j,m}`
//!   in free space, computed both by discrete Fourier inversion and by
//!   Gaussian subordination against a one-sided stable law;
//! * [`solver`]: the mild (Duhamel) formulation on the 2-D torus, with
//!   exponential integrators and per-slab Picard iteration;
//! * [`analyticity`]: radius-of-analyticity and derivative-bound measurements;
//! * [`inequalities`]: the elementary inequalities and recurrences behind the
//!   analyticity estimates.
#![no_std]
// `num_traits::Float` supplies the float math on older toolchains; newer ones
// and std test builds have the methods inherent.
#![allow(unused_imports)]
// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod analyticity;
pub mod error;
pub mod fft;
pub mod inequalities;
pub mod kernel;
pub mod quad;
pub mod report;
pub mod rng;
pub mod solver;
pub mod spectral;

pub use error::{Error, Result};
pub use report::{EstimateParams, EstimateReport};
pub use spectral::{SpectralScalarField, SpectralVectorField, TorusGrid};

/// `x^x` with the convention `0^0 = 1`, in log form: returns `x ln x`.
#[inline]
pub(crate) fn xlogx(x: f64) -> f64 {
    use num_traits::Float;
    if x == 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}
