use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridRef;

/// Fraction of the half-width beyond which mass counts as "near the boundary".
pub const GUARD_RADIUS_FRACTION: f64 = 0.9;
/// Maximum boundary mass fraction for a run to be considered valid.
pub const GUARD_MASS_FRACTION: f64 = 1e-8;

/// Complex samples of a wave function on a grid at one time.
#[derive(Clone, Debug)]
pub struct WaveField {
    pub grid: GridRef,
    pub values: Vec<Complex64>,
    pub time: f64,
}

impl WaveField {
    pub fn zeros(grid: &GridRef, time: f64) -> Self {
        WaveField { grid: grid.clone(), values: vec![Complex64::new(0.0, 0.0); grid.len()], time }
    }

    pub fn from_fn<F>(grid: &GridRef, time: f64, f: F) -> Self
    where
        F: Fn(&[f64]) -> Complex64,
    {
        let dim = grid.dim();
        let mut x = vec![0.0; dim];
        let values = (0..grid.len())
            .map(|idx| {
                for (axis, xa) in x.iter_mut().enumerate() {
                    *xa = grid.x_at(idx, axis);
                }
                f(&x)
            })
            .collect();
        WaveField { grid: grid.clone(), values, time }
    }

    pub fn from_values(grid: &GridRef, values: Vec<Complex64>, time: f64) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidArgument(format!("expected {} samples, got {}", grid.len(), values.len())));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::NonFinite(time));
        }
        Ok(WaveField { grid: grid.clone(), values, time })
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    /// L2 norm by rectangle-rule quadrature (spectrally accurate for periodic data).
    pub fn l2_norm(&self) -> f64 {
        (self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.cell_volume()).sqrt()
    }

    /// `\int conj(self) other dx`.
    pub fn inner(&self, other: &WaveField) -> Result<Complex64> {
        self.check_grid(other)?;
        let s: Complex64 = self.values.iter().zip(&other.values).map(|(a, b)| a.conj() * b).sum();
        Ok(s * self.grid.cell_volume())
    }

    pub fn distance(&self, other: &WaveField) -> Result<f64> {
        self.check_grid(other)?;
        let s: f64 = self.values.iter().zip(&other.values).map(|(a, b)| (a - b).norm_sqr()).sum();
        Ok((s * self.grid.cell_volume()).sqrt())
    }

    pub fn sub(&self, other: &WaveField) -> Result<WaveField> {
        self.check_grid(other)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        Ok(WaveField { grid: self.grid.clone(), values, time: self.time })
    }

    pub fn scaled(&self, c: Complex64) -> WaveField {
        WaveField { grid: self.grid.clone(), values: self.values.iter().map(|v| v * c).collect(), time: self.time }
    }

    pub fn conj(&self) -> WaveField {
        WaveField { grid: self.grid.clone(), values: self.values.iter().map(|v| v.conj()).collect(), time: self.time }
    }

    pub fn with_time(mut self, time: f64) -> WaveField {
        self.time = time;
        self
    }

    pub fn check_grid(&self, other: &WaveField) -> Result<()> {
        if self.grid.same_as(&other.grid) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// Fraction of the mass located where some coordinate exceeds `0.9 L` in magnitude.
    pub fn boundary_mass_fraction(&self) -> f64 {
        let cut = GUARD_RADIUS_FRACTION * self.grid.half_width();
        let dim = self.grid.dim();
        let (mut outer, mut total) = (0.0, 0.0);
        for (idx, v) in self.values.iter().enumerate() {
            let m = v.norm_sqr();
            total += m;
            if (0..dim).any(|a| self.grid.x_at(idx, a).abs() > cut) {
                outer += m;
            }
        }
        if total == 0.0 {
            0.0
        } else {
            outer / total
        }
    }

    pub fn check_guard(&self) -> Result<()> {
        let fraction = self.boundary_mass_fraction();
        if fraction > GUARD_MASS_FRACTION {
            Err(Error::GuardViolation { time: self.time, fraction })
        } else {
            Ok(())
        }
    }
}

/// `amplitude * exp(-|x - center|^2 / (2 width^2)) * exp(i velocity . x)`.
///
/// `center` and `velocity` hold one entry per axis; missing axes are zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianDatum {
    pub amplitude: f64,
    pub width: f64,
    #[serde(default)]
    pub center: Vec<f64>,
    #[serde(default)]
    pub velocity: Vec<f64>,
}

impl Default for GaussianDatum {
    fn default() -> Self {
        GaussianDatum { amplitude: 1.0, width: 1.0, center: Vec::new(), velocity: Vec::new() }
    }
}

impl GaussianDatum {
    pub fn standard(amplitude: f64) -> Self {
        GaussianDatum { amplitude, ..Default::default() }
    }

    fn axis(v: &[f64], a: usize) -> f64 {
        v.get(a).copied().unwrap_or(0.0)
    }

    pub fn sample(&self, grid: &GridRef) -> WaveField {
        let w2 = self.width * self.width;
        WaveField::from_fn(grid, 0.0, |x| {
            let mut re = 0.0;
            let mut ph = 0.0;
            for (a, xa) in x.iter().enumerate() {
                let d = xa - Self::axis(&self.center, a);
                re -= d * d / (2.0 * w2);
                ph += Self::axis(&self.velocity, a) * xa;
            }
            Complex64::new(re, ph).exp() * self.amplitude
        })
    }
}
