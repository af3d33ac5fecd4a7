//! Turning trajectories into verdicts: scattering states and Cauchy tables,
//! weighted distances, the Fourier identity between the scattering state and
//! the pseudo-conformal limit, the lens dichotomy quantity, the root
//! certificate for `s - a - b s^{1+p}`, log-log rate fits, and Richardson
//! extrapolation of endpoint limits.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::diagnostics::{hs_distance, sigma_norm};
use crate::error::{Error, Result};
use crate::exponent::ExponentData;
use crate::field::WaveField;
use crate::propagate::free_flow;
use crate::quadrature::cos_weight_integral_adaptive;
use crate::spectral::{forward_transform, top_octave_fraction};
use crate::transforms::{spectrum_field, ChirpResampler, RESOLUTION_AUDIT_LIMIT};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// `e^{-iT Lap} u(T)` with a resolution audit.
pub fn scattering_state(u: &WaveField) -> Result<WaveField> {
    let top = top_octave_fraction(u);
    if top > RESOLUTION_AUDIT_LIMIT {
        return Err(Error::UnderResolved(top));
    }
    Ok(free_flow(u, -u.time).with_time(0.0))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CauchyTable {
    pub times: Vec<f64>,
    /// Sobolev index of the distances.
    pub s: f64,
    /// Symmetric, zero diagonal.
    pub distances: Vec<Vec<f64>>,
    /// Distances between consecutive states.
    pub increments: Vec<f64>,
    pub strictly_decreasing: bool,
    /// Last increment over the first.
    pub decay_ratio: f64,
}

#[derive(Clone, Debug)]
pub struct Extraction {
    pub states: Vec<WaveField>,
    pub table: CauchyTable,
}

/// Scattering states at `times`, taken from matching snapshots of a trajectory,
/// and their pairwise `H^s` distances.
pub fn extract_scattering_state(trajectory: &[WaveField], times: &[f64], s: f64) -> Result<Extraction> {
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::InvalidArgument(format!("Sobolev index {s} outside [0, 1]")));
    }
    let mut states = Vec::with_capacity(times.len());
    for &t in times {
        let snap = trajectory
            .iter()
            .find(|f| (f.time - t).abs() <= 1e-9 * t.abs().max(1.0))
            .ok_or_else(|| Error::InvalidArgument(format!("no snapshot at time {t}")))?;
        states.push(scattering_state(snap)?);
    }
    let k = states.len();
    let mut distances = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in i + 1..k {
            let d = hs_distance(&states[i], &states[j], s)?;
            distances[i][j] = d;
            distances[j][i] = d;
        }
    }
    let increments: Vec<f64> = (1..k).map(|i| distances[i - 1][i]).collect();
    let strictly_decreasing = increments.windows(2).all(|w| w[1] < w[0]);
    let decay_ratio = match (increments.first(), increments.last()) {
        (Some(&a), Some(&b)) if a > 0.0 => b / a,
        _ => 0.0,
    };
    Ok(Extraction { states, table: CauchyTable { times: times.to_vec(), s, distances, increments, strictly_decreasing, decay_ratio } })
}

/// `|| (|x|/t) (u(t) - e^{it Lap} phi_plus) ||_{L^2}`.
pub fn weighted_distance(u: &WaveField, phi_plus: &WaveField, t: f64) -> Result<f64> {
    if t == 0.0 {
        return Err(Error::ZeroTime);
    }
    u.check_grid(phi_plus)?;
    let free = free_flow(phi_plus, t);
    let s: f64 = u.values.iter().zip(&free.values).zip(u.grid.radius_sq()).map(|((a, b), r2)| r2 * (a - b).norm_sqr()).sum();
    Ok((s * u.grid.cell_volume()).sqrt() / t.abs())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityResidual {
    pub residual: f64,
    /// Both sides vanish; the residual is reported as zero.
    pub degenerate: bool,
}

/// Relative `L^2` mismatch between `phi_plus^(xi)` and `(2i)^{n/2} conj(w_plus(2 xi))`
/// on the wavenumber lattice of `phi_plus`'s grid.
pub fn identity_residual(phi_plus: &WaveField, w_plus: &WaveField) -> Result<IdentityResidual> {
    let lhs = spectrum_field(&forward_transform(phi_plus))?;
    let resampler = ChirpResampler::new(&w_plus.grid, &lhs.grid, 2.0, 0.0)?;
    let scaled = resampler.resample(w_plus)?;
    let n = lhs.grid.dim() as f64;
    let factor = Complex64::new(0.0, 2.0).powf(n / 2.0);
    let rhs_values: Vec<Complex64> = scaled.values.iter().map(|v| factor * v.conj()).collect();
    let rhs = WaveField { grid: lhs.grid.clone(), values: rhs_values, time: 0.0 };
    let scale = lhs.l2_norm().max(rhs.l2_norm());
    if scale == 0.0 {
        return Ok(IdentityResidual { residual: 0.0, degenerate: true });
    }
    Ok(IdentityResidual { residual: lhs.distance(&rhs)? / scale, degenerate: false })
}

/// `|v|_Sigma^p (\int_t^{pi/4} cos(2 tau)^{-beta})^{(4 - p(n-2))/4}` with
/// `beta = 4 alpha / (4 - p(n-2))`; requires `4/(n+2) < p` (and `p < 4/(n-2)` for `n > 2`).
pub fn dichotomy_quantity(v: &WaveField, t: f64, exp: &ExponentData) -> Result<f64> {
    let (n, p) = (exp.n as f64, exp.p);
    if !(p > 4.0 / (n + 2.0)) || (n > 2.0 && !(p < 4.0 / (n - 2.0))) {
        return Err(Error::DivergentTail(format!("tail integral diverges for n = {n}, p = {p}")));
    }
    if !(t.abs() < std::f64::consts::FRAC_PI_4) {
        return Err(Error::LensTimeOutOfRange(t));
    }
    let gamma = (4.0 - p * (n - 2.0)) / 4.0;
    let beta = exp.alpha / gamma;
    let tail = cos_weight_integral_adaptive(t, std::f64::consts::FRAC_PI_4, beta);
    Ok(sigma_norm(v).powf(p) * tail.powf(gamma))
}

/// `f(s) = s - a - b s^{1+p}`.
pub fn sublevel_function(a: f64, b: f64, p: f64, s: f64) -> f64 {
    s - a - b * s.powf(1.0 + p)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SublevelStructure {
    pub threshold_ok: bool,
    /// Maximiser `((p+1) b)^{-1/p}`.
    pub s_bar: f64,
    /// When `threshold_ok`: `{f <= 0} = [0, c] U [d, inf)`.
    pub c: Option<f64>,
    pub d: Option<f64>,
}

fn bisect_root<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> f64 {
    // f(lo) and f(hi) have opposite signs; run until the bracket stops shrinking
    let negative_at_lo = f(lo) < 0.0;
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if (f(mid) < 0.0) == negative_at_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if f(lo).abs() <= f(hi).abs() {
        lo
    } else {
        hi
    }
}

/// Sublevel set of `s - a - b s^{1+p}` on `[0, inf)`.
pub fn sublevel_structure(a: f64, b: f64, p: f64) -> Result<SublevelStructure> {
    if !(a >= 0.0 && b > 0.0 && p > 0.0) || !a.is_finite() || !b.is_finite() || !p.is_finite() {
        return Err(Error::InvalidArgument(format!("need a >= 0, b > 0, p > 0 (a = {a}, b = {b}, p = {p})")));
    }
    let s_bar = ((p + 1.0) * b).powf(-1.0 / p);
    let bound = (p + 1.0).powf(-1.0 / p) - (p + 1.0).powf(-1.0 - 1.0 / p);
    let threshold_ok = a * b.powf(1.0 / p) < bound;
    if !threshold_ok {
        return Ok(SublevelStructure { threshold_ok, s_bar, c: None, d: None });
    }
    let f = |s: f64| sublevel_function(a, b, p, s);
    if a == 0.0 {
        return Ok(SublevelStructure { threshold_ok, s_bar, c: Some(0.0), d: Some(b.powf(-1.0 / p)) });
    }
    let c = bisect_root(f, 0.0, s_bar);
    let mut hi = 2.0 * s_bar;
    while f(hi) > 0.0 {
        hi *= 2.0;
    }
    let d = bisect_root(f, s_bar, hi);
    Ok(SublevelStructure { threshold_ok, s_bar, c: Some(c), d: Some(d) })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub stderr: f64,
    /// 95% Student-t interval for the slope.
    pub ci_low: f64,
    pub ci_high: f64,
    pub samples: usize,
}

/// Least-squares slope of `log value` against `log time`.
pub fn rate_fit(series: &[(f64, f64)]) -> Result<RateFit> {
    if series.len() < 5 {
        return Err(Error::InvalidArgument(format!("rate fit needs at least 5 samples, got {}", series.len())));
    }
    if let Some(&(t, v)) = series.iter().find(|(t, v)| !(*t > 0.0 && *v > 0.0) || !t.is_finite() || !v.is_finite()) {
        return Err(Error::InvalidArgument(format!("rate fit needs positive samples, got ({t}, {v})")));
    }
    let pts: Vec<(f64, f64)> = series.iter().map(|(t, v)| (t.ln(), v.ln())).collect();
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("rate fit needs distinct times".into()));
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let stderr = (rss / (k - 2.0) / sxx).sqrt();
    let quantile = StudentsT::new(0.0, 1.0, k - 2.0).map_err(|e| Error::InvalidArgument(e.to_string()))?.inverse_cdf(0.975);
    Ok(RateFit { slope, intercept, stderr, ci_low: slope - quantile * stderr, ci_high: slope + quantile * stderr, samples: series.len() })
}

/// Extrapolated limit and the size of the last correction.
#[derive(Clone, Debug)]
pub struct Extrapolated {
    pub field: WaveField,
    pub tolerance: f64,
}

/// Three-level Richardson extrapolation of `F(h), F(h/2), F(h/4)` assuming
/// `F(h) = F0 + A h^{g1} + B h^{g2} + ...`.
pub fn richardson(levels: [&WaveField; 3], exponents: (f64, f64)) -> Result<Extrapolated> {
    let [f0, f1, f2] = levels;
    f0.check_grid(f1)?;
    f1.check_grid(f2)?;
    let combine = |coarse: &WaveField, fine: &WaveField, g: f64| -> WaveField {
        let r = 2f64.powf(g);
        let values = coarse.values.iter().zip(&fine.values).map(|(c, f)| (r * f - c) / (r - 1.0)).collect();
        WaveField { grid: fine.grid.clone(), values, time: fine.time }
    };
    let a = combine(f0, f1, exponents.0);
    let b = combine(f1, f2, exponents.0);
    let limit = combine(&a, &b, exponents.1);
    let tolerance = limit.distance(&b)?;
    Ok(Extrapolated { field: limit, tolerance })
}

/// Finite-resolution proxy for a bounded norm sequence: successive changes
/// shrink and the last value stays within twice the first.
pub fn bounded_trend(values: &[f64]) -> bool {
    if values.len() < 3 {
        return false;
    }
    let diffs: Vec<f64> = values.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    diffs.windows(2).all(|d| d[1] <= d[0]) && values[values.len() - 1] <= 2.0 * values[0]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Comparison {
    Le,
    Lt,
    Ge,
    Gt,
    /// Inside `[threshold, upper]`.
    Within,
}

/// A pass/fail statement with the operation and tolerance behind it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub operation: String,
    pub value: f64,
    pub comparison: Comparison,
    pub threshold: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upper: Option<f64>,
    pub pass: bool,
}

impl Verdict {
    pub fn new(operation: &str, value: f64, comparison: Comparison, threshold: f64) -> Self {
        let pass = match comparison {
            Comparison::Le => value <= threshold,
            Comparison::Lt => value < threshold,
            Comparison::Ge => value >= threshold,
            Comparison::Gt => value > threshold,
            Comparison::Within => false,
        };
        Verdict { operation: operation.into(), value, comparison, threshold, upper: None, pass }
    }

    pub fn within(operation: &str, value: f64, low: f64, high: f64) -> Self {
        Verdict {
            operation: operation.into(),
            value,
            comparison: Comparison::Within,
            threshold: low,
            upper: Some(high),
            pass: value >= low && value <= high,
        }
    }

    /// A boolean property; `value` is 1 or 0.
    pub fn flag(operation: &str, holds: bool) -> Self {
        Verdict::new(operation, if holds { 1.0 } else { 0.0 }, Comparison::Ge, 1.0)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ScatteringReport {
    pub schema_version: u32,
    pub scenario: String,
    pub extraction_times: Vec<f64>,
    /// Persisted state files, relative to the report.
    pub states: Vec<String>,
    pub cauchy_table: Vec<Vec<f64>>,
    pub fitted_rates: BTreeMap<String, RateFit>,
    pub identity_residuals: BTreeMap<String, f64>,
    /// Other named scalars worth keeping.
    pub values: BTreeMap<String, f64>,
    pub verdicts: BTreeMap<String, Verdict>,
}

impl ScatteringReport {
    pub fn new(scenario: &str) -> Self {
        ScatteringReport { schema_version: REPORT_SCHEMA_VERSION, scenario: scenario.into(), ..Default::default() }
    }

    pub fn verdict(&mut self, name: &str, v: Verdict) {
        self.verdicts.insert(name.into(), v);
    }

    pub fn all_pass(&self) -> bool {
        self.verdicts.values().all(|v| v.pass)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let report: ScatteringReport = serde_json::from_str(text)?;
        if report.schema_version != REPORT_SCHEMA_VERSION {
            return Err(Error::Config(format!("unsupported report schema version {}", report.schema_version)));
        }
        Ok(report)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::hs_norm;
    use crate::exponent::classify_exponent;
    use crate::field::GaussianDatum;
    use crate::grid::make_grid;
    use crate::oracle::free_gaussian;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_4, PI};

    #[test]
    fn free_trajectory_has_constant_state() {
        // the box must contain the free wave at t = 40 to roundoff, |x| <~ 2 t |xi| with |xi| <~ 7
        let g = make_grid(1, 8192, 200.0 * PI).unwrap();
        let d = GaussianDatum { amplitude: 1.0, width: 1.0, center: vec![0.0], velocity: vec![0.3] };
        let times = [10.0, 20.0, 40.0];
        let traj: Vec<WaveField> = times.iter().map(|&t| free_gaussian(&d, &g, t)).collect();
        let ex = extract_scattering_state(&traj, &times, 1.0).unwrap();
        let phi = d.sample(&g);
        for st in &ex.states {
            assert!(st.distance(&phi).unwrap() <= 1e-10);
        }
        assert!(ex.table.distances.iter().flatten().all(|d| *d <= 1e-10));
        assert!(extract_scattering_state(&traj, &[15.0], 1.0).is_err());
        assert!(extract_scattering_state(&traj, &times, 1.5).is_err());
    }

    #[test]
    fn extraction_commutes_with_free_shift() {
        let g = make_grid(1, 1024, 40.0 * PI).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let base: Vec<WaveField> = (0..3)
            .map(|i| {
                let d = GaussianDatum {
                    amplitude: rng.gen_range(0.5..1.5),
                    width: 1.0,
                    center: vec![rng.gen_range(-2.0..2.0)],
                    velocity: vec![0.0],
                };
                d.sample(&g).with_time(1.0 + i as f64)
            })
            .collect();
        let times = [1.0, 2.0, 3.0];
        let c = 2.5;
        let shifted: Vec<WaveField> = base.iter().map(|f| free_flow(f, c)).collect();
        let shifted_times: Vec<f64> = times.iter().map(|t| t + c).collect();
        let a = extract_scattering_state(&base, &times, 1.0).unwrap();
        let b = extract_scattering_state(&shifted, &shifted_times, 1.0).unwrap();
        for (x, y) in a.states.iter().zip(&b.states) {
            assert!(x.distance(y).unwrap() <= 1e-12);
        }
    }

    #[test]
    fn weighted_distance_examples() {
        let g = make_grid(1, 1024, 40.0 * PI).unwrap();
        let phi = GaussianDatum::standard(1.0).sample(&g);
        let t = 2.0;
        assert!(weighted_distance(&free_flow(&phi, t).with_time(t), &phi, t).unwrap() <= 1e-14);
        // |e^{2i Lap} phi|^2 = |1 + 4i|^{-1} exp(-x^2 / 17): \int x^2 |.|^2 = sqrt(pi) 17^{3/2} / (2 sqrt 17)
        let oracle = 0.5 * (PI.sqrt() * 17f64.powf(1.5) / (2.0 * 17f64.sqrt())).sqrt();
        let got = weighted_distance(&WaveField::zeros(&g, t), &phi, t).unwrap();
        assert!((got - oracle).abs() < 1e-10, "{got} vs {oracle}");
        assert!(matches!(weighted_distance(&phi, &phi, 0.0), Err(Error::ZeroTime)));
    }

    /// Pseudo-conformal limit of the free evolution of `phi`: `w(x) = 2^{-n/2} e^{i pi n/4} conj(phi^(x/2))`.
    fn free_w_plus(phi_hat_at: impl Fn(f64) -> Complex64, grid: &crate::grid::GridRef) -> WaveField {
        WaveField::from_fn(grid, 0.0, |x| Complex64::from_polar(2f64.powf(-0.5), PI / 4.0) * phi_hat_at(x[0] / 2.0).conj())
    }

    #[test]
    fn identity_residual_linear_case() {
        let g = make_grid(1, 1024, 40.0 * PI).unwrap();
        let (c, v) = (0.7, 0.4);
        let phi = GaussianDatum { amplitude: 1.0, width: 1.0, center: vec![c], velocity: vec![v] }.sample(&g);
        // transform of e^{-(x-c)^2/2} e^{ivx}
        let hat = |xi: f64| Complex64::from_polar((-(xi - v).powi(2) / 2.0).exp(), -(xi - v) * c);
        let wg = make_grid(1, 512, 20.0).unwrap();
        let w = free_w_plus(hat, &wg);
        let r = identity_residual(&phi, &w).unwrap();
        assert!(!r.degenerate);
        assert!(r.residual <= 1e-6, "{}", r.residual);

        // common translation of both inputs leaves the residual unchanged
        let shift = 1.3;
        let phi2 = GaussianDatum { amplitude: 1.0, width: 1.0, center: vec![c + shift], velocity: vec![v] }.sample(&g);
        let hat2 = |xi: f64| Complex64::from_polar((-(xi - v).powi(2) / 2.0).exp(), -(xi - v) * (c + shift));
        let r2 = identity_residual(&phi2, &free_w_plus(hat2, &wg)).unwrap();
        assert!((r2.residual - r.residual).abs() <= 1e-6);

        let z = identity_residual(&WaveField::zeros(&g, 0.0), &WaveField::zeros(&wg, 0.0)).unwrap();
        assert_eq!(z, IdentityResidual { residual: 0.0, degenerate: true });
    }

    #[test]
    fn dichotomy_quantity_examples() {
        let g = make_grid(1, 256, 16.0).unwrap();
        let e = classify_exponent(1, 3.0);
        assert_eq!(dichotomy_quantity(&WaveField::zeros(&g, 0.3), 0.3, &e).unwrap(), 0.0);
        let v = GaussianDatum::standard(1.0).sample(&g);
        let series: Vec<f64> = [0.5, 0.7, 0.77, 0.785].iter().map(|&t| dichotomy_quantity(&v, t, &e).unwrap()).collect();
        assert!(series.windows(2).all(|w| w[1] < w[0]));
        assert!(series[3] < 0.05 * series[0]);
        assert!(matches!(dichotomy_quantity(&v, 0.3, &classify_exponent(1, 1.2)), Err(Error::DivergentTail(_))));
        assert!(matches!(dichotomy_quantity(&v, 0.3, &classify_exponent(4, 2.5)), Err(Error::DivergentTail(_))));
        assert!(dichotomy_quantity(&v, FRAC_PI_4, &e).is_err());
    }

    #[test]
    fn sublevel_examples() {
        let r = sublevel_structure(0.4, 0.4, 1.0).unwrap();
        assert!(r.threshold_ok);
        assert!((r.c.unwrap() - 0.5).abs() < 1e-12 && (r.d.unwrap() - 2.0).abs() < 1e-12);
        let z = sublevel_structure(0.0, 0.25, 2.0).unwrap();
        assert_eq!(z.c, Some(0.0));
        assert_eq!(z.d, Some(2.0));
        let none = sublevel_structure(1.0, 1.0, 1.0).unwrap();
        assert!(!none.threshold_ok && none.c.is_none() && none.d.is_none());
        let h = 10.0 / 1e5;
        assert!((0..=100_000).all(|i| sublevel_function(1.0, 1.0, 1.0, i as f64 * h) <= 0.0));
        assert!(sublevel_structure(-0.1, 1.0, 1.0).is_err());
        assert!(sublevel_structure(0.1, 0.0, 1.0).is_err());
    }

    #[test]
    fn rate_fit_examples() {
        let exact: Vec<(f64, f64)> = (1..=12).map(|i| (i as f64, (i as f64).powf(-0.75))).collect();
        let f = rate_fit(&exact).unwrap();
        assert!((f.slope + 0.75).abs() <= 1e-12);
        let flat: Vec<(f64, f64)> = (1..=8).map(|i| (i as f64, 3.0)).collect();
        assert!(rate_fit(&flat).unwrap().slope.abs() <= 1e-14);
        let wobble: Vec<(f64, f64)> = (0..40).map(|i| 10.0 + i as f64 * 2.5).map(|s| (s, s.powf(-0.75) * (1.0 + 0.01 * s.sin()))).collect();
        let w = rate_fit(&wobble).unwrap();
        assert!((w.slope + 0.75).abs() <= 0.01);
        assert!(w.ci_low <= w.slope && w.slope <= w.ci_high);
        assert!(rate_fit(&exact[..4]).is_err());
        let mut bad = exact.clone();
        bad[2].1 = 0.0;
        assert!(rate_fit(&bad).is_err());
    }

    #[test]
    fn richardson_removes_known_terms() {
        let g = make_grid(1, 64, 5.0).unwrap();
        let base = GaussianDatum::standard(1.0).sample(&g);
        let level = |h: f64| {
            let c = Complex64::new(1.0 + 0.3 * h.powf(0.5) - 0.2 * h, 0.0);
            base.scaled(c)
        };
        let (a, b, c) = (level(0.1), level(0.05), level(0.025));
        let out = richardson([&a, &b, &c], (0.5, 1.0)).unwrap();
        assert!(out.field.distance(&base).unwrap() < 1e-13);
        assert!(out.tolerance > 0.0);
    }

    #[test]
    fn bounded_trend_examples() {
        assert!(bounded_trend(&[1.0, 1.2, 1.3, 1.35]));
        assert!(!bounded_trend(&[1.0, 2.0, 4.0, 8.0]));
        assert!(!bounded_trend(&[1.0, 1.1]));
    }

    #[test]
    fn report_round_trips_and_checks_version() {
        let mut rep = ScatteringReport::new("free-check");
        rep.verdict("oracle", Verdict::new("free_flow", 1e-12, Comparison::Le, 1e-10));
        rep.verdict("ratio", Verdict::within("renormalized_variance", 0.99, 0.95, 1.05));
        rep.cauchy_table = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
        assert!(rep.all_pass());
        let text = rep.to_json().unwrap();
        assert!(text.contains("\"schema_version\": 1"));
        assert_eq!(ScatteringReport::from_json(&text).unwrap(), rep);
        let bumped = text.replace("\"schema_version\": 1", "\"schema_version\": 9");
        assert!(ScatteringReport::from_json(&bumped).is_err());
        assert!(!Verdict::flag("x", false).pass);
    }

    #[test]
    fn state_audit_rejects_rough_fields() {
        let g = make_grid(1, 64, 5.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let values = (0..64).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), 0.0)).collect();
        let rough = WaveField::from_values(&g, values, 1.0).unwrap();
        assert!(matches!(scattering_state(&rough), Err(Error::UnderResolved(_))));
        let smooth = GaussianDatum::standard(1.0).sample(&g).with_time(1.0);
        assert!((hs_norm(&scattering_state(&smooth).unwrap(), 1.0) - hs_norm(&smooth, 1.0)).abs() < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn sublevel_roots_are_roots(a in 0.0f64..2.0, b in 0.01f64..4.0, p in 0.2f64..4.0) {
            let r = sublevel_structure(a, b, p).unwrap();
            if r.threshold_ok {
                let (c, d) = (r.c.unwrap(), r.d.unwrap());
                prop_assert!(c < r.s_bar && r.s_bar < d);
                prop_assert!(sublevel_function(a, b, p, c).abs() <= 1e-10);
                prop_assert!(sublevel_function(a, b, p, d).abs() <= 1e-10);
                prop_assert!(sublevel_function(a, b, p, r.s_bar) > 0.0);
            }
        }

        #[test]
        fn cauchy_table_is_symmetric(seed in any::<u64>()) {
            let g = make_grid(1, 128, 12.0).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let traj: Vec<WaveField> = (1..=3).map(|i| {
                GaussianDatum { amplitude: rng.gen_range(0.5..1.5), width: rng.gen_range(0.8..1.5), center: vec![rng.gen_range(-1.0..1.0)], velocity: vec![0.0] }
                    .sample(&g).with_time(i as f64 * 0.1)
            }).collect();
            let ex = extract_scattering_state(&traj, &[0.1, 0.2, 0.3], 0.5).unwrap();
            for i in 0..3 {
                prop_assert_eq!(ex.table.distances[i][i], 0.0);
                for j in 0..3 {
                    prop_assert_eq!(ex.table.distances[i][j], ex.table.distances[j][i]);
                }
            }
        }
    }
}
