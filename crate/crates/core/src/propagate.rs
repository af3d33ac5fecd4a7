//! Linear flows and the Strang split-step integrator for the three weighted
//! evolutions
//!
//! ```text
//! physical:         i u_t + Lap u - u |u|^p = 0
//! pseudo-conformal: i w_t + Lap w - t^{-alpha} w |w|^p = 0,        t in (0, 1]
//! lens:             i v_t - H v - cos(2t)^{-alpha} v |v|^p = 0,    t in [0, pi/4),  H = -Lap + |x|^2
//! ```
//!
//! Each step is half kinetic, full pointwise phase, half kinetic. The pointwise
//! part (nonlinearity plus the harmonic potential for the lens variant)
//! preserves the modulus, so it is integrated exactly once the time-weight
//! integral over the step is known.

use std::f64::consts::FRAC_PI_4;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{gradient_norm_sq, lp_integral, sigma_norm_sq, DiagnosticRecord};
use crate::error::{Error, Result};
use crate::exponent::{classify_exponent, ExponentData};
use crate::field::WaveField;
use crate::grid::Grid;
use crate::quadrature::{cos_weight_integral, power_weight_integral};
use crate::spectral::FftWork;

/// Orientation of the harmonic-oscillator group: the linear lens flow is
/// `exp(HARMONIC_FLOW_SIGN * i t H)`. Fixed to `-1` by the Hermite eigenphase
/// check (`e^{-it}` on the ground state) and by the lens identity against the
/// free flow; see the tests at the bottom of this file.
pub const HARMONIC_FLOW_SIGN: f64 = -1.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    PhysicalNls,
    PseudoConformal,
    Lens,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquationSpec {
    pub variant: Variant,
    pub exponents: ExponentData,
}

impl EquationSpec {
    pub fn new(variant: Variant, n: u32, p: f64) -> Self {
        EquationSpec { variant, exponents: classify_exponent(n, p) }
    }

    pub fn p(&self) -> f64 {
        self.exponents.p
    }

    pub fn alpha(&self) -> f64 {
        self.exponents.alpha
    }

    /// Time weight in front of the nonlinearity.
    pub fn weight(&self, t: f64) -> f64 {
        match self.variant {
            Variant::PhysicalNls => 1.0,
            Variant::PseudoConformal => t.powf(-self.alpha()),
            Variant::Lens => (2.0 * t).cos().powf(-self.alpha()),
        }
    }

    /// Oriented `\int_a^b W`.
    pub fn weight_integral(&self, a: f64, b: f64) -> f64 {
        match self.variant {
            Variant::PhysicalNls => b - a,
            Variant::PseudoConformal => power_weight_integral(a, b, self.alpha()),
            Variant::Lens => cos_weight_integral(a, b, self.alpha()),
        }
    }

    /// Time at which the weight degenerates, if any.
    pub fn singular_endpoint(&self) -> Option<f64> {
        match self.variant {
            Variant::PhysicalNls => None,
            Variant::PseudoConformal => Some(0.0),
            Variant::Lens => Some(FRAC_PI_4),
        }
    }

    fn admissible(&self, t: f64) -> bool {
        match self.variant {
            Variant::PhysicalNls => t.is_finite(),
            Variant::PseudoConformal => t > 0.0,
            Variant::Lens => t.abs() < FRAC_PI_4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepPolicy {
    pub base_dt: f64,
    /// Endpoint the run may approach but not reach.
    pub singular_endpoint: Option<f64>,
    /// Maximum `|\int W|` per step; `None` means uniform steps.
    pub weight_budget: Option<f64>,
    pub max_steps: usize,
}

impl StepPolicy {
    pub fn uniform(dt: f64) -> Self {
        StepPolicy { base_dt: dt, singular_endpoint: None, weight_budget: None, max_steps: 50_000_000 }
    }

    /// Equal-weight-budget policy with `kappa = fraction * |\int_{t0}^{t1} W|`.
    pub fn budgeted(spec: &EquationSpec, t0: f64, t1: f64, dt: f64, fraction: f64) -> Self {
        let total = spec.weight_integral(t0, t1).abs();
        StepPolicy {
            base_dt: dt,
            singular_endpoint: spec.singular_endpoint(),
            weight_budget: Some(fraction * total),
            max_steps: 50_000_000,
        }
    }

    /// Budgeted policy with the default fraction 0.01.
    pub fn default_for(spec: &EquationSpec, t0: f64, t1: f64, dt: f64) -> Self {
        Self::budgeted(spec, t0, t1, dt, 0.01)
    }
}

/// Sample times at which the observer fires, plus diagnostic settings.
#[derive(Clone, Debug, Default)]
pub struct Sampling {
    pub times: Vec<f64>,
    /// Cone aperture `R` for the exterior moment in each record.
    pub cone_radius: f64,
}

impl Sampling {
    pub fn at(times: &[f64]) -> Self {
        Sampling { times: times.to_vec(), cone_radius: 10.0 }
    }

    pub fn none() -> Self {
        Sampling { times: Vec::new(), cone_radius: 10.0 }
    }
}

#[derive(Clone, Debug)]
pub struct EvolveOutput {
    pub field: WaveField,
    pub records: Vec<DiagnosticRecord>,
    pub steps: usize,
}

/// Strang stepper. Adjacent half-kinetic substeps are fused, so a run of
/// equal steps costs one forward/inverse transform pair per step; `flush`
/// applies the outstanding half step before the field is looked at.
struct SplitStepper<'g> {
    grid: &'g Grid,
    work: FftWork,
    /// Two most recent kinetic multipliers keyed by the bits of their duration.
    cache: [(u64, Vec<Complex64>); 2],
    pending: f64,
    with_potential: bool,
    p: f64,
}

/// `m2^{p/2}` with cheap paths for the common exponents.
#[inline]
fn modulus_power(m2: f64, p: f64) -> f64 {
    if p == 2.0 {
        m2
    } else if p == 3.0 {
        m2 * m2.sqrt()
    } else if p == 4.0 {
        m2 * m2
    } else if p == 1.0 {
        m2.sqrt()
    } else {
        m2.powf(p / 2.0)
    }
}

impl<'g> SplitStepper<'g> {
    fn new(grid: &'g Grid, with_potential: bool, p: f64) -> Self {
        SplitStepper {
            grid,
            work: FftWork::new(grid),
            cache: [(f64::NAN.to_bits(), Vec::new()), (f64::NAN.to_bits(), Vec::new())],
            pending: 0.0,
            with_potential,
            p,
        }
    }

    /// Kinetic propagation over `tau`.
    fn drift(&mut self, u: &mut [Complex64], tau: f64) {
        if tau == 0.0 {
            return;
        }
        let key = tau.to_bits();
        if self.cache[0].0 != key {
            if self.cache[1].0 == key {
                self.cache.swap(0, 1);
            } else {
                let sign = if self.with_potential { HARMONIC_FLOW_SIGN } else { -1.0 };
                let mult = self.grid.k_sq().iter().map(|k2| Complex64::from_polar(1.0, sign * k2 * tau)).collect();
                self.cache.swap(0, 1);
                self.cache[0] = (key, mult);
            }
        }
        let grid = self.grid;
        self.work.multiply_in_fourier(grid, u, &self.cache[0].1);
    }

    /// Exact pointwise phase over a step of length `h` with weight integral `weight_integral`.
    fn kick(&self, u: &mut [Complex64], h: f64, weight_integral: f64) {
        let r2 = self.grid.radius_sq();
        for (idx, v) in u.iter_mut().enumerate() {
            let m2 = v.norm_sqr();
            let mut phase = if m2 > 0.0 { -modulus_power(m2, self.p) * weight_integral } else { 0.0 };
            if self.with_potential {
                phase += HARMONIC_FLOW_SIGN * r2[idx] * h;
            }
            let (s, c) = phase.sin_cos();
            *v *= Complex64::new(c, s);
        }
    }

    fn step(&mut self, u: &mut [Complex64], h: f64, weight_integral: f64) {
        let tau = self.pending + 0.5 * h;
        self.drift(u, tau);
        self.kick(u, h, weight_integral);
        self.pending = 0.5 * h;
    }

    fn flush(&mut self, u: &mut [Complex64]) {
        let tau = self.pending;
        self.drift(u, tau);
        self.pending = 0.0;
    }
}

/// `e^{it Lap} f`, exact up to roundoff.
pub fn free_flow(f: &WaveField, t: f64) -> WaveField {
    let grid = &f.grid;
    let mult: Vec<Complex64> = grid.k_sq().iter().map(|k2| Complex64::from_polar(1.0, -k2 * t)).collect();
    let mut values = f.values.clone();
    FftWork::new(grid).multiply_in_fourier(grid, &mut values, &mult);
    WaveField { grid: grid.clone(), values, time: f.time + t }
}

/// Strang approximation of `exp(HARMONIC_FLOW_SIGN * i t H) f` with steps no longer than `dt`.
pub fn harmonic_flow(f: &WaveField, t: f64, dt: f64) -> WaveField {
    harmonic_flow_oriented(f, t, dt, HARMONIC_FLOW_SIGN)
}

pub(crate) fn harmonic_flow_oriented(f: &WaveField, t: f64, dt: f64, sign: f64) -> WaveField {
    assert!(dt > 0.0, "step must be positive");
    let grid = &f.grid;
    let steps = ((t.abs() / dt).ceil() as usize).max(1);
    let h = t / steps as f64;
    let half: Vec<Complex64> = grid.k_sq().iter().map(|k2| Complex64::from_polar(1.0, sign * k2 * h * 0.5)).collect();
    let pot: Vec<Complex64> = grid.radius_sq().iter().map(|r2| Complex64::from_polar(1.0, sign * r2 * h)).collect();
    let mut work = FftWork::new(grid);
    let mut values = f.values.clone();
    if t != 0.0 {
        for _ in 0..steps {
            work.multiply_in_fourier(grid, &mut values, &half);
            for (v, q) in values.iter_mut().zip(&pot) {
                *v *= q;
            }
            work.multiply_in_fourier(grid, &mut values, &half);
        }
    }
    WaveField { grid: grid.clone(), values, time: f.time + t }
}

fn check_field(u: &[Complex64], t: f64) -> Result<()> {
    if u.iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(t))
    }
}

/// Integrates `spec` from `f0.time` to `t1`, firing `observer` at every sample time.
///
/// The run is rejected if it would cross or touch the weight singularity, if
/// the wrap-around guard fails at the start or at any sample, or if a NaN
/// appears.
pub fn evolve<O>(
    spec: &EquationSpec,
    f0: &WaveField,
    t1: f64,
    policy: &StepPolicy,
    sampling: &Sampling,
    mut observer: O,
) -> Result<EvolveOutput>
where
    O: FnMut(&WaveField, &DiagnosticRecord),
{
    let t0 = f0.time;
    if !(policy.base_dt > 0.0) {
        return Err(Error::InvalidArgument(format!("step {} must be positive", policy.base_dt)));
    }
    if !spec.admissible(t0) || !spec.admissible(t1) {
        return Err(Error::InvalidArgument(format!("interval [{t0}, {t1}] leaves the domain of the {:?} weight", spec.variant)));
    }
    check_field(&f0.values, t0)?;
    f0.check_guard()?;

    let dir = if t1 >= t0 { 1.0 } else { -1.0 };
    let within = |s: f64| (s - t0) * dir >= 0.0 && (t1 - s) * dir >= 0.0;
    let mut stops: Vec<(f64, bool)> = sampling.times.iter().filter(|s| within(**s)).map(|&s| (s, true)).collect();
    stops.push((t1, false));
    stops.sort_by(|a, b| ((a.0 - b.0) * dir).partial_cmp(&0.0).unwrap().then(b.1.cmp(&a.1)));
    stops.dedup_by(|b, a| {
        if a.0 == b.0 {
            a.1 |= b.1;
            true
        } else {
            false
        }
    });

    let grid = f0.grid.clone();
    let p = spec.p();
    let mut stepper = SplitStepper::new(&grid, spec.variant == Variant::Lens, p);
    let mut u = f0.values.clone();
    let mut t = t0;
    let mut steps = 0usize;
    let mut records = Vec::new();

    let mut observe = |u: &[Complex64], t: f64, records: &mut Vec<DiagnosticRecord>| -> Result<()> {
        check_field(u, t)?;
        let field = WaveField { grid: grid.clone(), values: u.to_vec(), time: t };
        field.check_guard()?;
        let rec = DiagnosticRecord::evaluate(&field, p, sampling.cone_radius);
        observer(&field, &rec);
        records.push(rec);
        Ok(())
    };

    for &(stop, is_sample) in &stops {
        while (stop - t) * dir > 0.0 {
            let mut h = dir * policy.base_dt;
            let mut reaches = false;
            if ((t + h) - stop) * dir >= -1e-12 * policy.base_dt {
                h = stop - t;
                reaches = true;
            }
            let mut w = spec.weight_integral(t, t + h);
            if let Some(kappa) = policy.weight_budget {
                if w.abs() > kappa {
                    let (mut lo, mut hi) = (0.0, 1.0);
                    for _ in 0..60 {
                        let mid = 0.5 * (lo + hi);
                        if spec.weight_integral(t, t + mid * h).abs() > kappa {
                            hi = mid;
                        } else {
                            lo = mid;
                        }
                    }
                    h *= lo;
                    reaches = false;
                    w = spec.weight_integral(t, t + h);
                    if h == 0.0 {
                        return Err(Error::StepBudgetExhausted { reached: t, target: t1, steps });
                    }
                }
            }
            stepper.step(&mut u, h, w);
            t = if reaches { stop } else { t + h };
            steps += 1;
            if steps > policy.max_steps {
                return Err(Error::StepBudgetExhausted { reached: t, target: t1, steps });
            }
            if steps.is_multiple_of(256) {
                check_field(&u, t)?;
            }
        }
        stepper.flush(&mut u);
        if is_sample {
            observe(&u, t, &mut records)?;
        }
    }
    check_field(&u, t1)?;
    let field = WaveField { grid: grid.clone(), values: u, time: t1 };
    field.check_guard()?;
    Ok(EvolveOutput { field, records, steps })
}

/// Convenience wrapper without sampling.
pub fn evolve_to(spec: &EquationSpec, f0: &WaveField, t1: f64, policy: &StepPolicy) -> Result<WaveField> {
    Ok(evolve(spec, f0, t1, policy, &Sampling::none(), |_, _| {})?.field)
}

/// Richardson self-convergence estimate from runs with `dt`, `dt/2`, `dt/4`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceOrder {
    /// `log2(|u_dt - u_dt/2| / |u_dt/2 - u_dt/4|)`, infinite when `exact`.
    pub order: f64,
    /// Both increments are at roundoff level.
    pub exact: bool,
    pub increments: [f64; 2],
}

pub fn self_convergence_order(spec: &EquationSpec, f0: &WaveField, t1: f64, dt: f64) -> Result<ConvergenceOrder> {
    let runs: Vec<WaveField> =
        [dt, dt / 2.0, dt / 4.0].iter().map(|&h| evolve_to(spec, f0, t1, &StepPolicy::uniform(h))).collect::<Result<_>>()?;
    let e1 = runs[0].distance(&runs[1])?;
    let e2 = runs[1].distance(&runs[2])?;
    let scale = runs[2].l2_norm().max(f64::MIN_POSITIVE);
    if e1 <= 1e-13 * scale && e2 <= 1e-13 * scale {
        return Ok(ConvergenceOrder { order: f64::INFINITY, exact: true, increments: [e1, e2] });
    }
    Ok(ConvergenceOrder { order: (e1 / e2).log2(), exact: false, increments: [e1, e2] })
}

/// Coefficient of `\int |v|^{p+2}` in the monitored functionals, as a multiple of `1/(p+2)`.
pub const MONITORED_POTENTIAL_FACTOR: f64 = 2.0;

/// Monitored functional along a pseudo-conformal or lens trajectory.
///
/// Pseudo-conformal: `t^alpha |grad w|^2 + 2/(p+2) |w|_{p+2}^{p+2}`, bounded on `(0, 1]`
/// by its value at `t = 1`. Lens: `cos(2t)^alpha |v|_Sigma^2 + 2/(p+2) |v|_{p+2}^{p+2}`,
/// non-increasing on `[0, pi/4)`.
pub fn monitored_functional(spec: &EquationSpec, snapshots: &[WaveField]) -> Vec<(f64, f64)> {
    let (p, alpha) = (spec.p(), spec.alpha());
    let c = MONITORED_POTENTIAL_FACTOR / (p + 2.0);
    snapshots
        .iter()
        .map(|f| {
            let t = f.time;
            let lp = lp_integral(f, p + 2.0);
            let value = match spec.variant {
                Variant::PseudoConformal => t.powf(alpha) * gradient_norm_sq(f) + c * lp,
                Variant::Lens => (2.0 * t).cos().powf(alpha) * sigma_norm_sq(f) + c * lp,
                Variant::PhysicalNls => 0.5 * gradient_norm_sq(f) + lp / (p + 2.0),
            };
            (t, value)
        })
        .collect()
}
