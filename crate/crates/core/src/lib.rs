//! Pseudospectral simulation and scattering diagnostics for defocusing,
//! mass-subcritical nonlinear Schrödinger equations
//!
//! ```text
//! i u_t + Lap u - u |u|^p = 0,    x in R^n,  0 < p < 4/n
//! ```
//!
//! The crate provides periodic spectral grids, a Strang split-step integrator
//! for the physical equation and its pseudo-conformal and lens-transformed
//! weighted versions, the transforms between these pictures, and tools to
//! extract scattering states and fit decay rates.

// `!(x < y)` is used on purpose so that NaN fails the check
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod error;
pub mod experiment;
pub mod exponent;
pub mod field;
pub mod grid;
pub mod oracle;
pub mod persist;
pub mod propagate;
pub mod quadrature;
pub mod scattering;
pub mod spectral;
pub mod transforms;

pub use error::{Error, Result};
pub use field::{GaussianDatum, WaveField};
pub use grid::{make_grid, Grid, GridRef};
