//! Unitary Fourier transform on a [`Grid`] and spectral multipliers.
//!
//! The convention is `h^(xi) = (2 pi)^(-n/2) \int e^{-i x.xi} h(x) dx`. On the
//! lattice this is a scaled DFT with a `(-1)^m` phase that accounts for the
//! box starting at `-L`, so `h^(k_m)` approximates the continuum integral and
//! discrete Plancherel holds with weights `dx^n` and `dk^n`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::WaveField;
use crate::grid::{axis_index, Grid, GridRef};

/// Fourier coefficients `h^(k_m)` in FFT order.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub grid: GridRef,
    pub coefficients: Vec<Complex64>,
    pub time_tag: f64,
}

impl Spectrum {
    pub fn zeros(grid: &GridRef) -> Self {
        Spectrum { grid: grid.clone(), coefficients: vec![Complex64::new(0.0, 0.0); grid.len()], time_tag: 0.0 }
    }

    /// `(sum |h^|^2 dk^n)^(1/2)`.
    pub fn l2_norm(&self) -> f64 {
        (self.coefficients.iter().map(|c| c.norm_sqr()).sum::<f64>() * self.grid.k_cell_volume()).sqrt()
    }

    /// Coefficient at signed mode numbers `m` (one per axis, each in `[-N/2, N/2)`).
    pub fn at_mode(&self, m: &[i64]) -> Option<Complex64> {
        let n = self.grid.points_per_axis() as i64;
        if m.len() != self.grid.dim() || m.iter().any(|&mi| mi < -n / 2 || mi >= n / 2) {
            return None;
        }
        let idx = m.iter().fold(0usize, |acc, &mi| acc * n as usize + mi.rem_euclid(n) as usize);
        Some(self.coefficients[idx])
    }
}

/// Per-call scratch for in-place transforms.
pub(crate) struct FftWork {
    scratch: Vec<Complex64>,
    line: Vec<Complex64>,
}

impl FftWork {
    pub(crate) fn new(grid: &Grid) -> Self {
        let len = grid.fft.get_inplace_scratch_len().max(grid.ifft.get_inplace_scratch_len());
        FftWork { scratch: vec![Complex64::new(0.0, 0.0); len], line: vec![Complex64::new(0.0, 0.0); grid.points_per_axis()] }
    }

    /// Unnormalised multi-dimensional DFT in place.
    pub(crate) fn dft(&mut self, grid: &Grid, data: &mut [Complex64], forward: bool) {
        let plan = if forward { &grid.fft } else { &grid.ifft };
        let n = grid.points_per_axis();
        for row in data.chunks_exact_mut(n) {
            plan.process_with_scratch(row, &mut self.scratch);
        }
        if grid.dim() == 2 {
            for col in 0..n {
                for (i, v) in self.line.iter_mut().enumerate() {
                    *v = data[i * n + col];
                }
                plan.process_with_scratch(&mut self.line, &mut self.scratch);
                for (i, v) in self.line.iter().enumerate() {
                    data[i * n + col] = *v;
                }
            }
        }
    }

    /// Applies the diagonal Fourier multiplier `m[idx]` (FFT order) to physical-space samples.
    pub(crate) fn multiply_in_fourier(&mut self, grid: &Grid, data: &mut [Complex64], multiplier: &[Complex64]) {
        self.dft(grid, data, true);
        let norm = 1.0 / grid.len() as f64;
        for (v, m) in data.iter_mut().zip(multiplier) {
            *v *= m * norm;
        }
        self.dft(grid, data, false);
    }
}

fn parity_sign(grid: &Grid, idx: usize) -> f64 {
    let mut s = 0usize;
    for axis in 0..grid.dim() {
        s += axis_index(idx, axis, grid.dim(), grid.points_per_axis());
    }
    if s.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

pub fn forward_transform(field: &WaveField) -> Spectrum {
    let grid = &field.grid;
    let mut data = field.values.clone();
    FftWork::new(grid).dft(grid, &mut data, true);
    let scale = (grid.spacing() / (2.0 * std::f64::consts::PI).sqrt()).powi(grid.dim() as i32);
    for (idx, v) in data.iter_mut().enumerate() {
        *v *= scale * parity_sign(grid, idx);
    }
    Spectrum { grid: grid.clone(), coefficients: data, time_tag: field.time }
}

pub fn inverse_transform(spec: &Spectrum) -> WaveField {
    let grid = &spec.grid;
    let mut data = spec.coefficients.clone();
    for (idx, v) in data.iter_mut().enumerate() {
        *v *= parity_sign(grid, idx);
    }
    FftWork::new(grid).dft(grid, &mut data, false);
    let scale = (grid.dk() / (2.0 * std::f64::consts::PI).sqrt()).powi(grid.dim() as i32);
    for v in data.iter_mut() {
        *v *= scale;
    }
    WaveField { grid: grid.clone(), values: data, time: spec.time_tag }
}

/// Pointwise multiplication by `m(k)`; the closure receives the wavenumber vector.
pub fn apply_multiplier<F>(spec: &Spectrum, m: F) -> Spectrum
where
    F: Fn(&[f64]) -> Complex64,
{
    let grid = &spec.grid;
    let mut k = vec![0.0; grid.dim()];
    let coefficients = spec
        .coefficients
        .iter()
        .enumerate()
        .map(|(idx, c)| {
            for (axis, ka) in k.iter_mut().enumerate() {
                *ka = grid.k_at(idx, axis);
            }
            c * m(&k)
        })
        .collect();
    Spectrum { grid: grid.clone(), coefficients, time_tag: spec.time_tag }
}

/// Same as [`apply_multiplier`] but checks the spectrum lives on `grid`.
pub fn apply_multiplier_on<F>(grid: &Grid, spec: &Spectrum, m: F) -> Result<Spectrum>
where
    F: Fn(&[f64]) -> Complex64,
{
    if !grid.same_as(&spec.grid) {
        return Err(Error::GridMismatch);
    }
    Ok(apply_multiplier(spec, m))
}

/// Spectral gradient, one component field per axis.
pub fn gradient(field: &WaveField) -> Vec<WaveField> {
    let spec = forward_transform(field);
    (0..field.grid.dim())
        .map(|axis| {
            let d = apply_multiplier(&spec, |k| Complex64::new(0.0, k[axis]));
            inverse_transform(&d)
        })
        .collect()
}

/// Fraction of spectral mass with any wavenumber component above `k_max/2`.
pub fn top_octave_fraction(field: &WaveField) -> f64 {
    let spec = forward_transform(field);
    let grid = &field.grid;
    let half = grid.k_max() / 2.0;
    let (mut top, mut total) = (0.0, 0.0);
    for (idx, c) in spec.coefficients.iter().enumerate() {
        let e = c.norm_sqr();
        total += e;
        if (0..grid.dim()).any(|a| grid.k_at(idx, a).abs() > half) {
            top += e;
        }
    }
    if total == 0.0 {
        0.0
    } else {
        top / total
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn random_field(grid: &GridRef, seed: u64) -> WaveField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = (0..grid.len()).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        WaveField::from_values(grid, values, 0.0).unwrap()
    }

    #[test]
    fn zero_maps_to_zero() {
        let g = make_grid(1, 64, 4.0).unwrap();
        let s = forward_transform(&WaveField::zeros(&g, 0.0));
        assert!(s.coefficients.iter().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn gaussian_transform_pair() {
        let g = make_grid(1, 1024, 40.0 * PI).unwrap();
        let f = WaveField::from_fn(&g, 0.0, |x| Complex64::new((-x[0] * x[0] / 2.0).exp(), 0.0));
        let s = forward_transform(&f);
        let err = s
            .coefficients
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let k = g.k_at(i, 0);
                (c - Complex64::new((-k * k / 2.0).exp(), 0.0)).norm()
            })
            .fold(0.0, f64::max);
        assert!(err <= 1e-10, "max error {err}");
    }

    #[test]
    fn lattice_mode_is_a_single_spike() {
        let g = make_grid(1, 128, 10.0).unwrap();
        let k0 = 5.0 * g.dk();
        let f = WaveField::from_fn(&g, 0.0, |x| Complex64::new(0.0, k0 * x[0]).exp());
        let s = forward_transform(&f);
        let spike = s.at_mode(&[5]).unwrap();
        assert!((spike.norm() * g.dk().sqrt() - f.l2_norm()).abs() < 1e-10 * f.l2_norm());
        let rest: f64 = s.coefficients.iter().enumerate().filter(|(i, _)| *i != 5).map(|(_, c)| c.norm()).fold(0.0, f64::max);
        assert!(rest < 1e-10);
    }

    #[test]
    fn plancherel_and_round_trip() {
        for (dim, n) in [(1usize, 256usize), (2, 32)] {
            let g = make_grid(dim, n, 3.7).unwrap();
            let f = random_field(&g, 11 + dim as u64);
            let s = forward_transform(&f);
            let (a, b) = (f.l2_norm(), s.l2_norm());
            assert!((a - b).abs() <= 1e-12 * a, "dim {dim}: {a} vs {b}");
            let back = inverse_transform(&s);
            let diff = f.distance(&back).unwrap();
            assert!(diff <= 1e-12 * a);
        }
    }

    #[test]
    fn identity_multiplier() {
        let g = make_grid(1, 64, 2.0).unwrap();
        let f = random_field(&g, 3);
        let s = forward_transform(&f);
        let t = apply_multiplier(&s, |_| Complex64::new(1.0, 0.0));
        assert_eq!(s.coefficients, t.coefficients);
    }

    #[test]
    fn derivative_multiplier_on_gaussian() {
        let g = make_grid(1, 1024, 40.0 * PI).unwrap();
        let f = WaveField::from_fn(&g, 0.0, |x| Complex64::new((-x[0] * x[0] / 2.0).exp(), 0.0));
        let d = inverse_transform(&apply_multiplier(&forward_transform(&f), |k| Complex64::new(0.0, k[0])));
        let err = d
            .values
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let x = g.x_at(i, 0);
                (v - Complex64::new(-x * (-x * x / 2.0).exp(), 0.0)).norm()
            })
            .fold(0.0, f64::max);
        assert!(err <= 1e-9, "{err}");
    }

    #[test]
    fn laplacian_eigenfunction() {
        let g = make_grid(1, 64, 6.0).unwrap();
        let k0 = 3.0 * g.dk();
        let f = WaveField::from_fn(&g, 0.0, |x| Complex64::new(0.0, k0 * x[0]).exp());
        let out = inverse_transform(&apply_multiplier(&forward_transform(&f), |k| Complex64::new(k[0] * k[0], 0.0)));
        for (a, b) in out.values.iter().zip(&f.values) {
            assert!((a - b * k0 * k0).norm() < 1e-12);
        }
    }

    #[test]
    fn gradient_of_anisotropic_gaussian() {
        let g = make_grid(2, 128, 12.0).unwrap();
        let f = WaveField::from_fn(&g, 0.0, |x| Complex64::new(-(x[0] * x[0] + 2.0 * x[1] * x[1]), 0.0).exp());
        let grad = gradient(&f);
        let mut err: f64 = 0.0;
        for idx in 0..g.len() {
            let (x, y) = (g.x_at(idx, 0), g.x_at(idx, 1));
            let v = f.values[idx].re;
            err = err.max((grad[0].values[idx].re + 2.0 * x * v).abs()).max((grad[1].values[idx].re + 4.0 * y * v).abs());
        }
        assert!(err < 1e-8, "{err}");
    }

    #[test]
    fn kinetic_identity() {
        let g = make_grid(1, 512, 20.0).unwrap();
        let f = WaveField::from_fn(&g, 0.0, |x| Complex64::new((-x[0] * x[0]).exp(), 0.3 * x[0] * (-x[0] * x[0]).exp()));
        let grad = gradient(&f);
        let phys: f64 = grad[0].values.iter().map(|v| v.norm_sqr()).sum::<f64>() * g.spacing();
        let s = forward_transform(&f);
        let spec: f64 = s.coefficients.iter().enumerate().map(|(i, c)| g.k_sq()[i] * c.norm_sqr()).sum::<f64>() * g.dk();
        assert!((phys - spec).abs() < 1e-12 * spec);
    }

    #[test]
    fn top_octave_detects_under_resolution() {
        let g = make_grid(1, 64, 4.0).unwrap();
        let smooth = WaveField::from_fn(&g, 0.0, |x| Complex64::new((-x[0] * x[0]).exp(), 0.0));
        assert!(top_octave_fraction(&smooth) < 1e-12);
        let rough = random_field(&g, 5);
        assert!(top_octave_fraction(&rough) > 0.1);
    }
}
