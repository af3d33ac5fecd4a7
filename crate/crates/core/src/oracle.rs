//! Closed-form free evolution of Gaussian packets.

use num_complex::Complex64;

use crate::field::{GaussianDatum, WaveField};
use crate::grid::GridRef;

/// `e^{it Lap}` applied to the packet `datum`, evaluated at the point `x`.
///
/// Per axis, with `z = 1 + 2it/w^2`:
/// `z^{-1/2} exp(-(x - c - 2vt)^2 / (2 w^2 z) + i v x - i v^2 t)`.
pub fn free_gaussian_value(datum: &GaussianDatum, x: &[f64], t: f64) -> Complex64 {
    let w2 = datum.width * datum.width;
    let z = Complex64::new(1.0, 2.0 * t / w2);
    let mut out = Complex64::new(datum.amplitude, 0.0);
    for (a, xa) in x.iter().enumerate() {
        let c = datum.center.get(a).copied().unwrap_or(0.0);
        let v = datum.velocity.get(a).copied().unwrap_or(0.0);
        let d = xa - c - 2.0 * v * t;
        out *= (-(d * d) / (2.0 * w2 * z) + Complex64::new(0.0, v * xa - v * v * t)).exp() / z.sqrt();
    }
    out
}

pub fn free_gaussian(datum: &GaussianDatum, grid: &GridRef, t: f64) -> WaveField {
    WaveField::from_fn(grid, t, |x| free_gaussian_value(datum, x, t))
}
