//! Scalar functionals of a [`WaveField`]: conserved quantities, Sobolev and
//! weighted norms, and the moment and gauge quantities that track the
//! approach to a free wave.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::WaveField;
use crate::spectral::{forward_transform, gradient};

pub fn mass(f: &WaveField) -> f64 {
    f.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * f.grid.cell_volume()
}

/// `\int |grad f|^2` through the multiplier `|k|^2`.
pub fn gradient_norm_sq(f: &WaveField) -> f64 {
    let spec = forward_transform(f);
    let k2 = f.grid.k_sq();
    spec.coefficients.iter().zip(k2).map(|(c, k)| k * c.norm_sqr()).sum::<f64>() * f.grid.k_cell_volume()
}

/// `\int |grad f|^2` by quadrature of the spectral gradient in physical space.
pub fn gradient_norm_sq_quadrature(f: &WaveField) -> f64 {
    gradient(f).iter().map(mass).sum()
}

/// `\int |f|^q`.
pub fn lp_integral(f: &WaveField, q: f64) -> f64 {
    let half = q / 2.0;
    f.values.iter().map(|v| v.norm_sqr().powf(half)).sum::<f64>() * f.grid.cell_volume()
}

pub fn lp_norm(f: &WaveField, q: f64) -> f64 {
    lp_integral(f, q).powf(1.0 / q)
}

/// `E = 1/2 \int |grad f|^2 + 1/(p+2) \int |f|^{p+2}`.
pub fn energy(f: &WaveField, p: f64) -> f64 {
    assert!(p > 0.0, "nonlinearity exponent must be positive");
    0.5 * gradient_norm_sq(f) + lp_integral(f, p + 2.0) / (p + 2.0)
}

/// `(sum (1 + |k|^2)^s |f^(k)|^2 dk^n)^(1/2)` for `s` in `[0, 2]`.
pub fn hs_norm(f: &WaveField, s: f64) -> f64 {
    assert!((0.0..=2.0).contains(&s), "Sobolev index {s} outside [0, 2]");
    if s == 0.0 {
        return forward_transform(f).l2_norm();
    }
    let spec = forward_transform(f);
    let k2 = f.grid.k_sq();
    (spec.coefficients.iter().zip(k2).map(|(c, k)| (1.0 + k).powf(s) * c.norm_sqr()).sum::<f64>() * f.grid.k_cell_volume()).sqrt()
}

/// H^s distance between two fields on the same grid.
pub fn hs_distance(a: &WaveField, b: &WaveField, s: f64) -> Result<f64> {
    Ok(hs_norm(&a.sub(b)?, s))
}

/// `\int |x|^2 |f|^2`.
pub fn second_moment(f: &WaveField) -> f64 {
    f.values.iter().zip(f.grid.radius_sq()).map(|(v, r2)| r2 * v.norm_sqr()).sum::<f64>() * f.grid.cell_volume()
}

/// `(\int |grad f|^2 + |f|^2 + |x|^2 |f|^2)^(1/2)`.
pub fn sigma_norm(f: &WaveField) -> f64 {
    sigma_norm_sq(f).sqrt()
}

pub fn sigma_norm_sq(f: &WaveField) -> f64 {
    gradient_norm_sq(f) + mass(f) + second_moment(f)
}

/// `|| grad u - i x/(2t) u ||_{L^2}`.
pub fn gauge_gradient_deficit(u: &WaveField, t: f64) -> Result<f64> {
    if t == 0.0 {
        return Err(Error::ZeroTime);
    }
    let grid = &u.grid;
    let grads = gradient(u);
    let mut acc = 0.0;
    for (axis, g) in grads.iter().enumerate() {
        for (idx, (gv, uv)) in g.values.iter().zip(&u.values).enumerate() {
            let x = grid.x_at(idx, axis);
            acc += (gv - Complex64::new(0.0, x / (2.0 * t)) * uv).norm_sqr();
        }
    }
    Ok((acc * grid.cell_volume()).sqrt())
}

/// `\int |x|^2 / t^2 |u|^2`.
pub fn renormalized_variance(u: &WaveField, t: f64) -> Result<f64> {
    if t == 0.0 {
        return Err(Error::ZeroTime);
    }
    Ok(second_moment(u) / (t * t))
}

/// `\int_{|x| > R t} |x|^2 / t^2 |u|^2`, cells assigned by centre.
pub fn cone_exterior_moment(u: &WaveField, t: f64, radius: f64) -> Result<f64> {
    if !(t > 0.0 && radius > 0.0) {
        return Err(Error::InvalidArgument(format!("cone moment needs t > 0 and R > 0 (t = {t}, R = {radius})")));
    }
    let cut = (radius * t).powi(2);
    let s: f64 = u.values.iter().zip(u.grid.radius_sq()).filter(|(_, r2)| **r2 > cut).map(|(v, r2)| r2 * v.norm_sqr()).sum();
    Ok(s * u.grid.cell_volume() / (t * t))
}

/// `\int_{|x| > R} |x|^2 |w|^2`, cells assigned by centre.
pub fn cylinder_exterior_moment(w: &WaveField, radius: f64) -> Result<f64> {
    if radius <= 0.0 {
        return Err(Error::InvalidArgument(format!("cylinder moment needs R > 0 (R = {radius})")));
    }
    let cut = radius * radius;
    let s: f64 = w.values.iter().zip(w.grid.radius_sq()).filter(|(_, r2)| **r2 > cut).map(|(v, r2)| r2 * v.norm_sqr()).sum();
    Ok(s * w.grid.cell_volume())
}

/// Column order of the diagnostics CSV.
pub const CSV_HEADER: &str = "time,mass,energy,h1,sigma,lp2,variance,cone_ext,gauge_deficit";

/// One sampled row of run diagnostics.
///
/// The time-weighted entries (`renorm_variance`, `cone_exterior`,
/// `gauge_deficit`) are undefined at `time == 0` and recorded as zero there.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticRecord {
    pub time: f64,
    pub mass: f64,
    pub energy: f64,
    pub h1_norm: f64,
    pub sigma_norm: f64,
    pub lp2_norm: f64,
    pub renorm_variance: f64,
    pub cone_exterior: f64,
    pub gauge_deficit: f64,
}

impl DiagnosticRecord {
    /// Evaluates every functional on `u` at its own time tag.
    pub fn evaluate(u: &WaveField, p: f64, cone_radius: f64) -> Self {
        let t = u.time;
        let grad2 = gradient_norm_sq(u);
        let m = mass(u);
        let lp = lp_integral(u, p + 2.0);
        let moment = second_moment(u);
        let (variance, cone, deficit) = if t == 0.0 {
            (0.0, 0.0, 0.0)
        } else {
            let tt = t.abs();
            (moment / (t * t), cone_exterior_moment(u, tt, cone_radius).unwrap_or(0.0), gauge_gradient_deficit(u, t).unwrap_or(0.0))
        };
        DiagnosticRecord {
            time: t,
            mass: m,
            energy: 0.5 * grad2 + lp / (p + 2.0),
            h1_norm: (grad2 + m).sqrt(),
            sigma_norm: (grad2 + m + moment).sqrt(),
            lp2_norm: lp.powf(1.0 / (p + 2.0)),
            renorm_variance: variance,
            cone_exterior: cone,
            gauge_deficit: deficit,
        }
    }

    fn columns(&self) -> [f64; 9] {
        [
            self.time,
            self.mass,
            self.energy,
            self.h1_norm,
            self.sigma_norm,
            self.lp2_norm,
            self.renorm_variance,
            self.cone_exterior,
            self.gauge_deficit,
        ]
    }

    pub fn to_csv_row(&self) -> String {
        self.columns().iter().map(|v| format!("{v:.17e}")).collect::<Vec<_>>().join(",")
    }

    pub fn from_csv_row(row: &str) -> Result<Self> {
        let vals: Vec<f64> = row
            .trim()
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parse { line: 0, msg: e.to_string() })?;
        if vals.len() != 9 {
            return Err(Error::Parse { line: 0, msg: format!("expected 9 columns, got {}", vals.len()) });
        }
        Ok(DiagnosticRecord {
            time: vals[0],
            mass: vals[1],
            energy: vals[2],
            h1_norm: vals[3],
            sigma_norm: vals[4],
            lp2_norm: vals[5],
            renorm_variance: vals[6],
            cone_exterior: vals[7],
            gauge_deficit: vals[8],
        })
    }
}

pub fn records_to_csv(records: &[DiagnosticRecord]) -> String {
    let mut out = String::with_capacity(64 + records.len() * 220);
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&r.to_csv_row());
        out.push('\n');
    }
    out
}

pub fn records_from_csv(text: &str) -> Result<Vec<DiagnosticRecord>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == CSV_HEADER => {}
        _ => return Err(Error::Parse { line: 1, msg: "missing diagnostics header".into() }),
    }
    lines
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            DiagnosticRecord::from_csv_row(l).map_err(|e| match e {
                Error::Parse { msg, .. } => Error::Parse { line: i + 1, msg },
                other => other,
            })
        })
        .collect()
}
