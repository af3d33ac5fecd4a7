//! Changes of picture: the time reparameterisation `t(s)`, the pseudo-conformal
//! transform, the lens transform and the large-time free-wave profile.
//!
//! All spatial rescalings go through [`ChirpResampler`], which removes a
//! quadratic phase, checks the remainder is resolved, and evaluates its
//! trigonometric interpolant at the scaled points.
//!
//! Branches: `cos(2t)^{-n/2}` is real and positive on `|t| < pi/4`, and
//! `(2it)^{-n/2}` uses the principal branch, so it equals
//! `(2|t|)^{-n/2} e^{-i pi n sign(t)/4}`.

use std::f64::consts::{FRAC_PI_4, PI};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{WaveField, GUARD_MASS_FRACTION};
use crate::grid::{axis_index, signed_mode, GridRef};
use crate::spectral::{forward_transform, top_octave_fraction, Spectrum};

/// Largest top-octave spectral mass fraction accepted before resampling.
pub const RESOLUTION_AUDIT_LIMIT: f64 = 1e-6;

/// Relative spectral energy discarded when cropping the interpolant.
const CROP_ENERGY: f64 = 1e-26;

/// `t(s) = arctan(2s)/2`.
pub fn time_map(s: f64) -> f64 {
    (2.0 * s).atan() / 2.0
}

/// `s(t) = tan(2t)/2` for `|t| < pi/4`.
pub fn time_map_inverse(t: f64) -> Result<f64> {
    if !(t.abs() < FRAC_PI_4) {
        return Err(Error::LensTimeOutOfRange(t));
    }
    Ok((2.0 * t).tan() / 2.0)
}

/// Evaluates `x -> g(scale * x)` on `target`, where `g = f e^{-i chirp_rate |y|^2}`
/// is the demodulated source field and its trigonometric interpolant is used
/// between samples. Points whose preimage leaves the source box read zero.
#[derive(Clone, Debug)]
pub struct ChirpResampler {
    pub source: GridRef,
    pub target: GridRef,
    pub scale: f64,
    pub chirp_rate: f64,
}

impl ChirpResampler {
    pub fn new(source: &GridRef, target: &GridRef, scale: f64, chirp_rate: f64) -> Result<Self> {
        if source.dim() != target.dim() {
            return Err(Error::GridMismatch);
        }
        if !(scale > 0.0 && scale.is_finite()) || !chirp_rate.is_finite() {
            return Err(Error::InvalidArgument(format!("bad resampling scale {scale} or chirp {chirp_rate}")));
        }
        Ok(ChirpResampler { source: source.clone(), target: target.clone(), scale, chirp_rate })
    }

    fn demodulate(&self, f: &WaveField) -> WaveField {
        if self.chirp_rate == 0.0 {
            return f.clone();
        }
        let values =
            f.values.iter().zip(self.source.radius_sq()).map(|(v, r2)| v * Complex64::from_polar(1.0, -self.chirp_rate * r2)).collect();
        WaveField { grid: f.grid.clone(), values, time: f.time }
    }

    /// Source mass fraction whose image falls outside the target box.
    pub fn overflow_fraction(&self, f: &WaveField) -> f64 {
        let reach = self.scale * self.target.half_width();
        let dim = self.source.dim();
        let (mut out, mut total) = (0.0, 0.0);
        for (idx, v) in f.values.iter().enumerate() {
            let m = v.norm_sqr();
            total += m;
            if (0..dim).any(|a| self.source.x_at(idx, a).abs() > reach) {
                out += m;
            }
        }
        if total == 0.0 {
            0.0
        } else {
            out / total
        }
    }

    pub fn resample(&self, f: &WaveField) -> Result<WaveField> {
        if !f.grid.same_as(&self.source) {
            return Err(Error::GridMismatch);
        }
        let g = self.demodulate(f);
        if self.scale == 1.0 && self.source.same_as(&self.target) {
            return Ok(g);
        }
        let overflow = self.overflow_fraction(f);
        if overflow > GUARD_MASS_FRACTION {
            return Err(Error::SupportOverflow(overflow));
        }
        let top = top_octave_fraction(&g);
        if top > RESOLUTION_AUDIT_LIMIT {
            return Err(Error::UnderResolved(top));
        }
        let spec = forward_transform(&g);
        let points: Vec<f64> = self.target.coords().iter().map(|x| self.scale * x).collect();
        let values = interpolate(&spec, &points);
        Ok(WaveField { grid: self.target.clone(), values, time: f.time })
    }
}

/// Smallest mode cutoff keeping all but `CROP_ENERGY` of the spectral energy.
fn crop_cutoff(spec: &Spectrum) -> i64 {
    let grid = &spec.grid;
    let n = grid.points_per_axis() as i64;
    let mut by_mode = vec![0.0; (n / 2 + 1) as usize];
    let mut total = 0.0;
    for (idx, c) in spec.coefficients.iter().enumerate() {
        let m = (0..grid.dim()).map(|a| grid.mode_at(idx, a).abs()).max().unwrap_or(0);
        by_mode[m as usize] += c.norm_sqr();
        total += c.norm_sqr();
    }
    let mut tail = 0.0;
    for m in (0..=n / 2).rev() {
        tail += by_mode[m as usize];
        if tail > CROP_ENERGY * total {
            return m.min(n / 2 - 1);
        }
    }
    0
}

/// Trigonometric interpolant of the field with spectrum `spec`, evaluated on the
/// tensor lattice `points^dim`; zero outside the source box.
fn interpolate(spec: &Spectrum, points: &[f64]) -> Vec<Complex64> {
    let grid = &spec.grid;
    let (dim, n) = (grid.dim(), grid.points_per_axis());
    let cut = crop_cutoff(spec);
    let modes: Vec<i64> = (-cut..=cut).collect();
    let half_width = grid.half_width();
    let c = (grid.dk() / (2.0 * PI).sqrt()).powi(dim as i32);
    let inside: Vec<bool> = points.iter().map(|y| *y >= -half_width && *y <= half_width).collect();
    // e^{i k_m y} for every kept mode and every evaluation point
    let basis: Vec<Vec<Complex64>> =
        points.iter().map(|y| modes.iter().map(|&m| Complex64::from_polar(1.0, m as f64 * grid.dk() * y)).collect()).collect();
    let fft_index = |m: i64| m.rem_euclid(n as i64) as usize;
    let nt = points.len();
    match dim {
        1 => (0..nt)
            .map(|t| {
                if !inside[t] {
                    return Complex64::new(0.0, 0.0);
                }
                modes.iter().zip(&basis[t]).map(|(&m, b)| spec.coefficients[fft_index(m)] * b).sum::<Complex64>() * c
            })
            .collect(),
        _ => {
            // contract the first axis, then the second
            let nm = modes.len();
            let mut partial = vec![Complex64::new(0.0, 0.0); nt * nm];
            for t0 in 0..nt {
                if !inside[t0] {
                    continue;
                }
                for (j1, &m1) in modes.iter().enumerate() {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (j0, &m0) in modes.iter().enumerate() {
                        acc += spec.coefficients[fft_index(m0) * n + fft_index(m1)] * basis[t0][j0];
                    }
                    partial[t0 * nm + j1] = acc;
                }
            }
            let mut out = vec![Complex64::new(0.0, 0.0); nt * nt];
            for t0 in 0..nt {
                if !inside[t0] {
                    continue;
                }
                for t1 in 0..nt {
                    if !inside[t1] {
                        continue;
                    }
                    let row = &partial[t0 * nm..(t0 + 1) * nm];
                    out[t0 * nt + t1] = row.iter().zip(&basis[t1]).map(|(p, b)| p * b).sum::<Complex64>() * c;
                }
            }
            out
        }
    }
}

/// `w(1/s, x) = s^{n/2} conj(u(s, s x)) e^{i s |x|^2/4}` for a field `u` at time `s`,
/// sampled on `target`. The map is an involution, so it also inverts itself.
/// Negative times use `u(-s) <-> conj(u(s))`.
pub fn pseudo_conformal_transform(u: &WaveField, target: &GridRef) -> Result<WaveField> {
    let s = u.time;
    if s == 0.0 || !s.is_finite() {
        return Err(Error::ZeroTime);
    }
    if s < 0.0 {
        let mirrored = u.conj().with_time(-s);
        let w = pseudo_conformal_transform(&mirrored, target)?;
        let t = w.time;
        return Ok(w.conj().with_time(-t));
    }
    // u(s, y) = g(y) e^{i |y|^2/(4s)}: the chirps cancel and leave s^{n/2} conj(g(s x))
    let resampler = ChirpResampler::new(&u.grid, target, s, 1.0 / (4.0 * s))?;
    let g = resampler.resample(u)?;
    let amp = s.powf(u.grid.dim() as f64 / 2.0);
    let values = g.values.iter().map(|v| v.conj() * amp).collect();
    Ok(WaveField { grid: target.clone(), values, time: 1.0 / s })
}

fn lens_cos(t: f64) -> Result<f64> {
    if !(t.abs() < FRAC_PI_4) {
        return Err(Error::LensTimeOutOfRange(t));
    }
    Ok((2.0 * t).cos())
}

/// `(L_t G)(x) = cos(2t)^{-n/2} G(x / cos 2t) e^{-i |x|^2 tan(2t)/2}` on `G`'s grid.
pub fn lens_apply(g: &WaveField, t: f64) -> Result<WaveField> {
    lens_apply_onto(g, t, &g.grid)
}

pub fn lens_apply_onto(g: &WaveField, t: f64, target: &GridRef) -> Result<WaveField> {
    let c = lens_cos(t)?;
    // removing e^{i sin(4t)|y|^2/4} from G makes the output chirp vanish exactly
    let resampler = ChirpResampler::new(&g.grid, target, 1.0 / c, (4.0 * t).sin() / 4.0)?;
    let out = resampler.resample(g)?;
    let amp = c.powf(-(g.grid.dim() as f64) / 2.0);
    Ok(out.scaled(Complex64::new(amp, 0.0)).with_time(t))
}

/// Inverse of [`lens_apply`]: `G(y) = cos(2t)^{n/2} F(y cos 2t) e^{i |y|^2 sin(4t)/4}`.
pub fn lens_invert(f: &WaveField, t: f64) -> Result<WaveField> {
    lens_invert_onto(f, t, &f.grid)
}

pub fn lens_invert_onto(f: &WaveField, t: f64, target: &GridRef) -> Result<WaveField> {
    let c = lens_cos(t)?;
    let resampler = ChirpResampler::new(&f.grid, target, c, 0.0)?;
    let out = resampler.resample(f)?;
    let amp = c.powf(f.grid.dim() as f64 / 2.0);
    let rate = (4.0 * t).sin() / 4.0;
    let values = out.values.iter().zip(target.radius_sq()).map(|(v, r2)| v * Complex64::from_polar(amp, rate * r2)).collect();
    Ok(WaveField { grid: target.clone(), values, time: (2.0 * t).tan() / 2.0 })
}

/// The spectrum as a field on the dual grid, whose sample points are the wavenumbers.
pub fn spectrum_field(spec: &Spectrum) -> Result<WaveField> {
    let grid = &spec.grid;
    let dual = grid.dual()?;
    let (dim, n) = (grid.dim(), grid.points_per_axis());
    let mut values = vec![Complex64::new(0.0, 0.0); grid.len()];
    for (idx, c) in spec.coefficients.iter().enumerate() {
        let natural = (0..dim).fold(0usize, |acc, a| {
            let m = signed_mode(axis_index(idx, a, dim, n), n);
            acc * n + (m + n as i64 / 2) as usize
        });
        values[natural] = *c;
    }
    Ok(WaveField { grid: dual, values, time: spec.time_tag })
}

/// `(2it)^{-n/2} e^{i |x|^2/(4t)} h^(x / 2t)`, the large-time profile of `e^{it Lap} h`.
pub fn mdfm_profile(phi_hat: &Spectrum, t: f64, target: &GridRef) -> Result<WaveField> {
    if t == 0.0 || !t.is_finite() {
        return Err(Error::ZeroTime);
    }
    let hat = spectrum_field(phi_hat)?;
    let profile = ChirpResampler::new(&hat.grid, target, 1.0 / (2.0 * t.abs()), 0.0)?;
    let mut out = if t > 0.0 {
        profile.resample(&hat)?
    } else {
        // h^(x/2t) = h^(-x/2|t|): resample the reflected spectrum
        let reflected = reflect(&hat);
        profile.resample(&reflected)?
    };
    let prefactor = Complex64::new(0.0, 2.0 * t).powf(-(target.dim() as f64) / 2.0);
    for (v, r2) in out.values.iter_mut().zip(target.radius_sq()) {
        *v *= prefactor * Complex64::from_polar(1.0, r2 / (4.0 * t));
    }
    out.time = t;
    Ok(out)
}

/// `x -> f(-x)` on a symmetric lattice; the unpaired `-L` sample maps to itself.
fn reflect(f: &WaveField) -> WaveField {
    let grid = &f.grid;
    let (dim, n) = (grid.dim(), grid.points_per_axis());
    let flip = |i: usize| if i == 0 { 0 } else { n - i };
    let values = (0..grid.len())
        .map(|idx| {
            let src = (0..dim).fold(0usize, |acc, a| acc * n + flip(axis_index(idx, a, dim, n)));
            f.values[src]
        })
        .collect();
    WaveField { grid: grid.clone(), values, time: f.time }
}
