//! One analysis per scenario. Each pulls the trajectories it needs from a
//! [`RunCache`] and turns them into a report with verdicts.

use std::fmt::Write as _;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::diagnostics::{energy, gradient_norm_sq, mass, DiagnosticRecord};
use crate::error::{Error, Result};
use crate::exponent::{classify_exponent, classify_exponent_rational, p_threshold, threshold_polynomial, Regime};
use crate::field::WaveField;
use crate::oracle::free_gaussian;
use crate::propagate::{free_flow, harmonic_flow, monitored_functional, self_convergence_order, EquationSpec, Variant};
use crate::scattering::{
    bounded_trend, dichotomy_quantity, extract_scattering_state, identity_residual, rate_fit, scattering_state, sublevel_function,
    sublevel_structure, weighted_distance, Comparison, ScatteringReport, Verdict,
};
use crate::transforms::{lens_apply, lens_apply_onto, lens_invert, pseudo_conformal_transform, time_map};

use super::config::{Scenario, ScenarioConfig};
use super::runs::{geometric_tail, lens_times, pseudo_conformal_limit, scattering_limit, RunCache, Trajectory};

/// Everything a scenario produces before it is written to disk.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub report: ScatteringReport,
    pub diagnostics: Vec<DiagnosticRecord>,
    /// Extra CSV tables as (file name, contents).
    pub tables: Vec<(String, String)>,
    /// Fields to persist as (file stem, field).
    pub states: Vec<(String, WaveField)>,
}

impl Outcome {
    fn new(cfg: &ScenarioConfig) -> Self {
        Outcome { report: ScatteringReport::new(cfg.scenario.name()), diagnostics: Vec::new(), tables: Vec::new(), states: Vec::new() }
    }

    fn le(&mut self, name: &str, operation: &str, value: f64, tol: f64) {
        self.report.verdict(name, Verdict::new(operation, value, Comparison::Le, tol));
    }

    fn value(&mut self, name: &str, v: f64) {
        self.report.values.insert(name.into(), v);
    }
}

pub fn analyze(cfg: &ScenarioConfig, cache: &RunCache) -> Result<Outcome> {
    match cfg.scenario {
        Scenario::FreeCheck => free_check(cfg),
        Scenario::Conservation => conservation(cfg, cache),
        Scenario::ScatterShortrange => scatter_shortrange(cfg, cache),
        Scenario::LongrangeContrast => longrange_contrast(cfg, cache),
        Scenario::PseudoconformalLimit => pseudoconformal_limit(cfg, cache),
        Scenario::LensRoundtrip => lens_roundtrip(cfg, cache),
        Scenario::Moments => moments(cfg, cache),
        Scenario::WeightedDecay => weighted_decay(cfg, cache),
        Scenario::EndpointIdentity => endpoint_identity(cfg, cache),
        Scenario::SublevelCertificate => sublevel_certificate(cfg),
        Scenario::Rates => rates(cfg, cache),
    }
}

fn union(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut all = [a, b].concat();
    all.sort_by(f64::total_cmp);
    all.dedup();
    all
}

fn main_run(cfg: &ScenarioConfig, cache: &RunCache, p: f64, extra: &[f64]) -> Result<std::sync::Arc<Trajectory>> {
    let time = cfg.time();
    let times = union(&union(&time.samples, &time.extraction), extra);
    cache.physical(cfg.grid(), &cfg.datum.gaussian(), p, time.dt, &times, cfg.analysis.cone_radius)
}

/// Diagnostics at the configured sample and extraction times.
fn configured_records(cfg: &ScenarioConfig, traj: &Trajectory) -> Vec<DiagnosticRecord> {
    let time = cfg.time();
    traj.restricted(&union(&time.samples, &time.extraction)).records
}

fn free_check(cfg: &ScenarioConfig) -> Result<Outcome> {
    let mut out = Outcome::new(cfg);
    let grid = cfg.grid().build()?;
    let datum = cfg.datum.gaussian();
    let phi = datum.sample(&grid);
    let times = if cfg.time().samples.is_empty() { vec![cfg.time().horizon] } else { cfg.time().samples.clone() };
    let mut worst: f64 = 0.0;
    for &t in &times {
        for s in [t, -t] {
            let evolved = free_flow(&phi, s);
            worst = worst.max(evolved.distance(&free_gaussian(&datum, &grid, s))?);
            if s > 0.0 {
                out.diagnostics.push(DiagnosticRecord::evaluate(&evolved, cfg.exponent().p, cfg.analysis.cone_radius));
            }
        }
    }
    out.le(
        "gaussian_oracle_error",
        "max over +-t of ||free_flow(phi, t) - closed-form Gaussian(t)||_L2",
        worst,
        cfg.tolerance("gaussian_oracle_error"),
    );
    Ok(out)
}

fn max_relative_drift(records: &[DiagnosticRecord], reference: f64, pick: fn(&DiagnosticRecord) -> f64) -> f64 {
    records.iter().map(|r| (pick(r) - reference).abs() / reference.abs()).fold(0.0, f64::max)
}

fn conservation(cfg: &ScenarioConfig, cache: &RunCache) -> Result<Outcome> {
    let mut out = Outcome::new(cfg);
    let (time, a) = (cfg.time(), &cfg.analysis);
    let (n, p) = (cfg.exponent().n, cfg.exponent().p);
    let grid = cfg.grid().build()?;
    let datum = cfg.datum.gaussian();
    let phi = datum.sample(&grid);
    let times = union(&time.samples, &[time.horizon]);
    let run = cache.physical(cfg.grid(), &datum, p, time.dt, &times, a.cone_radius)?;
    let half = cache.physical(cfg.grid(), &datum, p, time.dt / 2.0, &times, a.cone_radius)?;
    let (m0, e0) = (mass(&phi), energy(&phi, p));
    let mass_drift = max_relative_drift(&run.records, m0, |r| r.mass);
    let drift = max_relative_drift(&run.records, e0, |r| r.energy);
    let drift_half = max_relative_drift(&half.records, e0, |r| r.energy);
    out.le("mass_drift", "max_t |M(t) - M(0)| / M(0)", mass_drift, cfg.tolerance("mass_drift"));
    out.le("energy_drift", "max_t |E(t) - E(0)| / |E(0)| at time.dt", drift, cfg.tolerance("energy_drift"));
    let slack = cfg.tolerance("drift_ratio_slack");
    out.report.verdict(
        "energy_drift_ratio",
        Verdict::within("energy drift(dt) / energy drift(dt/2), expected 4", drift / drift_half, 4.0 * (1.0 - slack), 4.0 * (1.0 + slack)),
    );
    out.value("energy_drift_half_step", drift_half);

    let slack = cfg.tolerance("order_slack");
    let h = a.order_horizon;
    for (variant, name, t0, t1) in [
        (Variant::PhysicalNls, "order_physical", 0.0, h),
        (Variant::PseudoConformal, "order_pseudo_conformal", 1.0, 1.0 - h),
        (Variant::Lens, "order_lens", 0.0, h),
    ] {
        let spec = EquationSpec::new(variant, n, p);
        let order = self_convergence_order(&spec, &phi.clone().with_time(t0), t1, a.order_dt)?;
        out.report.verdict(
            name,
            Verdict::within("log2 of successive self-convergence increments (dt, dt/2, dt/4)", order.order, 2.0 - slack, 2.0 + slack),
        );
    }

    // Hermite eigenstates on the lens grid: ground phase e^{-i n t}, first excited e^{-i (n+2) t}
    let lens_grid = a.lens_grid(grid.dim()).build()?;
    let norm = std::f64::consts::PI.powf(-0.25 * grid.dim() as f64);
    let ground = WaveField::from_fn(&lens_grid, 0.0, |x| Complex64::new(norm * (-x.iter().map(|v| v * v).sum::<f64>() / 2.0).exp(), 0.0));
    let first = WaveField::from_fn(&lens_grid, 0.0, |x| {
        Complex64::new(norm * 2f64.sqrt() * x[0] * (-x.iter().map(|v| v * v).sum::<f64>() / 2.0).exp(), 0.0)
    });
    let t = a.hermite_time;
    let nf = n as f64;
    for (name, state, energy_level) in [("hermite_ground", &ground, nf), ("hermite_first", &first, nf + 2.0)] {
        let err = harmonic_flow(state, t, time.dt).distance(&state.scaled(Complex64::from_polar(1.0, -energy_level * t)).with_time(t))?;
        out.le(&format!("{name}_phase_error"), "||harmonic_flow(psi, t) - e^{-i E t} psi||_L2", err, cfg.tolerance("hermite_phase_error"));
    }
    out.diagnostics = run.records.clone();
    Ok(out)
}

fn scatter_shortrange(cfg: &ScenarioConfig, cache: &RunCache) -> Result<Outcome> {
    let mut out = Outcome::new(cfg);
    let (time, a) = (cfg.time(), &cfg.analysis);
    let p = cfg.exponent().p;
    let checks: Vec<f64> =
        if a.lens_check { a.lens_check_times.iter().copied().filter(|s| *s <= time.horizon).collect() } else { Vec::new() };
    let run = main_run(cfg, cache, p, &checks)?;
    let ex = &time.extraction;
    let extraction = extract_scattering_state(&run.snapshots, ex, a.sobolev_index)?;
    let table = &extraction.table;
    out.report.extraction_times = ex.clone();
    out.report.cauchy_table = table.distances.clone();
    for (t, inc) in ex.iter().skip(1).zip(&table.increments) {
        out.value(&format!("cauchy_increment_T{t}"), *inc);
    }
    out.report.verdict(
        "cauchy_strictly_decreasing",
        Verdict::flag("consecutive H^s distances of e^{-iT Lap} u(T) strictly decreasing", table.strictly_decreasing),
    );
    out.le(
        "cauchy_final_increment",
        "H^s distance between the last two extracted states",
        *table.increments.last().expect("at least three extraction times"),
        cfg.tolerance("cauchy_final_increment"),
    );
    let norms: Vec<f64> = extraction.states.iter().map(|s| (gradient_norm_sq(s) + mass(s)).sqrt()).collect();
    for (t, v) in ex.iter().zip(&norms) {
        out.value(&format!("state_h1_norm_T{t}"), *v);
    }
    out.report.verdict("state_h1_bounded", Verdict::flag("H^1 norms of extracted states show a bounded trend", bounded_trend(&norms)));
    for (t, st) in ex.iter().zip(extraction.states) {
        out.states.push((format!("phi_T{t}"), st));
    }

    if a.lens_check {
        let lens_grid = a.lens_grid(cfg.grid().dim);
        let lt = union(&lens_times(&checks), &[time_map(time.horizon)]);
        let lens = cache.lens(&lens_grid, &cfg.datum.gaussian(), p, a.weighted_dt, a.weight_fraction, &lt)?;
        let lg = lens_grid.build()?;
        let mut worst: f64 = 0.0;
        for &s in &checks {
            let t = time_map(s);
            let err = lens_apply_onto(run.at(s)?, t, &lg)?.distance(lens.at(t)?)?;
            out.value(&format!("lens_cross_check_s{s}"), err);
            worst = worst.max(err);
        }
        out.le(
            "lens_cross_check",
            "max_s ||lens(u(s), t(s)) - v(t(s))||_L2 against the lens-transformed run",
            worst,
            cfg.tolerance("lens_cross_check"),
        );
    }
    out.diagnostics = configured_records(cfg, &run);
    Ok(out)
}

fn min_ratio(increments: &[f64]) -> f64 {
    let first = increments[0];
    increments.iter().map(|v| v / first).fold(f64::INFINITY, f64::min)
}

fn longrange_contrast(cfg: &ScenarioConfig, cache: &RunCache) -> Result<Outcome> {
    let mut out = Outcome::new(cfg);
    let (time, a) = (cfg.time(), &cfg.analysis);
    let ex = &time.extraction;
    let floor = cfg.tolerance("increment_floor");
    let mut csv = String::from("p,time,increment\n");
    let mut ratios = Vec::new();
    for p in [cfg.exponent().p, a.contrast_p] {
        let run = main_run(cfg, cache, p, &[])?;
        let table = extract_scattering_state(&run.snapshots, ex, 0.0)?.table;
        for (t, inc) in ex.iter().skip(1).zip(&table.increments) {
            let _ = writeln!(csv, "{p},{t},{inc:.17e}");
        }
        ratios.push(min_ratio(&table.increments));
        if out.diagnostics.is_empty() {
            out.diagnostics = configured_records(cfg, &run);
            out.report.extraction_times = ex.clone();
            out.report.cauchy_table = table.distances.clone();
        }
    }
    out.report.verdict(
        "longrange_increment_floor",
        Verdict::new(
            &format!("min over T of L2 Cauchy increment / first increment, p = {}", cfg.exponent().p),
            ratios[0],
            Comparison::Ge,
            floor,
        ),
    );
    out.report.verdict(
        "shortrange_increment_decay",
        Verdict::new(
            &format!("min over T of L2 Cauchy increment / first increment, p = {}", a.contrast_p),
            ratios[1],
            Comparison::Lt,
            floor,
        ),
    );
    out.tables.push(("contrast.csv".into(), csv));
    Ok(out)
}

/// Pseudo-conformal times: the Richardson levels, the images of the check
/// times, and a dyadic ladder from 1 for the functional.
fn pc_times(cfg: &ScenarioConfig) -> Vec<f64> {
    let a = &cfg.analysis;
    let levels = a.pc_levels();
    let mut times: Vec<f64> = levels.to_vec();
    times.extend(a.pc_check_times.iter().map(|s| 1.0 / s));
    let mut t = 0.5;
    while t > levels[0] {
        times.push(t);
        t /= 2.0;
    }
    union(&times, &[1.0])
}

fn pc_run(cfg: &ScenarioConfig, cache: &RunCache) -> Result<std::sync::Arc<Trajectory>> {
    let (time, a) = (cfg.time(), &cfg.analysis);
    cache.pseudo_conformal(
        cfg.grid(),
        &cfg.datum.gaussian(),
        cfg.exponent().p,
        time.dt,
        &a.pc_grid(cfg.grid().dim),
        a.weighted_dt,
        a.weight_fraction,
        &pc_times(cfg),
    )
}

fn pseudoconformal_limit(cfg: &ScenarioConfig, cache: &RunCache) -> Result<Outcome> {
    let mut out = Outcome::new(cfg);
    let a = &cfg.analysis;
    let checks: Vec<f64> = a.pc_check_times.iter().copied().filter(|s| *s <= cfg.time().horizon).collect();
    let run = main_run(cfg, cache, cfg.exponent().p, &union(&checks, &[1.0]))?;
    let pc = pc_run(cfg, cache)?;
    let wg = a.pc_grid(cfg.grid().dim).build()?;
    let mut worst: f64 = 0.0;
    for &s in &checks {
        let err = pc.at(1.0 / s)?.distance(&pseudo_conformal_transform(run.at(s)?, &wg)?)?;
        out.value(&format!("pc_consistency_s{s}"), err);
        worst = worst.max(err);
    }
    out.le(
        "pc_consistency",
        "max_s ||w(1/s) - pseudo_conformal(u(s))||_L2 between the evolved and transformed pictures",
        worst,
        cfg.tolerance("pc_consistency"),
    );

    let levels = a.pc_levels();
    let limit = pseudo_conformal_limit(&pc, levels)?;
    out.value("w_plus_extrapolation_tolerance", limit.tolerance);
    let grads: Vec<f64> = levels.iter().map(|&t| Ok(gradient_norm_sq(pc.at(t)?).sqrt())).collect::<Result<_>>()?;
    for (t, g) in levels.iter().zip(&grads) {
        out.value(&format!("w_gradient_norm_t{t}"), *g);
    }
    out.report
        .verdict("w_gradient_bounded", Verdict::flag("||grad w(t)|| bounded along the geometric sequence t -> 0+", bounded_trend(&grads)));

    let mut ordered: Vec<WaveField> = pc.snapshots.clone();
    ordered.sort_by(|x, y| y.time.total_cmp(&x.time));
    let functional = monitored_functional(&pc.spec, &ordered);
    let start = functional[0].1;
    let excess = functional.iter().map(|(_, v)| (v - start) / start.abs()).fold(f64::NEG_INFINITY, f64::max);
    out.le(
        "pc_functional_bound",
        "max_{t<=1} (G(t) - G(1)) / G(1) for the pseudo-conformal functional",
        excess,
        cfg.tolerance("functional_slack"),
    );
    let mut csv = String::from("time,gradient_norm,functional\n");
    for (w, (t, g)) in ordered.iter().zip(&functional) {
        let _ = writeln!(csv, "{t},{:.17e},{g:.17e}", gradient_norm_sq(w).sqrt());
    }
    out.tables.push(("pseudo_conformal.csv".into(), csv));
    out.states.push(("w_plus".into(), limit.field));
    out.diagnostics = configured_records(cfg, &run);
    Ok(out)
}

fn lens_roundtrip(cfg: &ScenarioConfig, cache: &RunCache) -> Result<Outcome> {
    let mut out = Outcome::new(cfg);
    let (time, a) = (cfg.time(), &cfg.analysis);
    let (n, p) = (cfg.exponent().n, cfg.exponent().p);
    let grid = cfg.grid().build()?;
    let datum = cfg.datum.gaussian();
    let phi = datum.sample(&grid);

    let lens_grid = a.lens_grid(grid.dim());
    let phi_lens = datum.sample(&lens_grid.build()?);
    let mut worst: f64 = 0.0;
    let mut trip: f64 = 0.0;
    for &s in &a.lens_identity_times {
        let t = time_map(s);
        let lensed = lens_apply(&free_flow(&phi, s), t)?;
        let err = lensed.distance(&harmonic_flow(&phi, t, time.dt.min(1e-4)))?;
        out.value(&format!("lens_identity_s{s}"), err);
        worst = worst.max(err);
        let back = lens_invert(&lens_apply(&phi_lens, t)?, t)?;
        trip = trip.max(back.distance(&phi_lens)? / phi_lens.l2_norm());
    }
    out.le("lens_identity", "max_s ||lens(e^{is Lap} phi, t(s)) - harmonic_flow(phi, t(s))||_L2", worst, cfg.tolerance("lens_identity"));
    out.le("round_trip", "max_t ||lens_invert(lens_apply(phi, t), t) - phi|| / ||phi||", trip, cfg.tolerance("round_trip"));

    let t_end = time_map(time.horizon);
    if let Some(t) = a.dichotomy_times.iter().find(|t| !(**t > 0.0 && **t < t_end)) {
        return Err(Error::Config(format!("dichotomy time {t} outside (0, t(horizon) = {t_end})")));
    }
    let checks: Vec<f64> = a.lens_check_times.iter().copied().filter(|s| *s <= time.horizon).collect();
    let mut lt: Vec<f64> = Vec::new();
    let mut t = 0.0;
    while t < t_end {
        lt.push(t);
        t += a.lens_sample_spacing;
    }
    let lt = union(&union(&lt, &a.dichotomy_times), &union(&lens_times(&checks), &[t_end]));
    let lens = cache.lens(&lens_grid, &datum, p, a.weighted_dt, a.weight_fraction, &lt)?;

    if !checks.is_empty() {
        let run = cache.physical(cfg.grid(), &datum, p, time.dt, &checks, a.cone_radius)?;
        let lg = lens_grid.build()?;
        let mut worst: f64 = 0.0;
        for &s in &checks {
            let t = time_map(s);
            let err = lens_apply_onto(run.at(s)?, t, &lg)?.distance(lens.at(t)?)?;
            out.value(&format!("lens_composition_s{s}"), err);
            worst = worst.max(err);
        }
        out.le(
            "lens_composition",
            "max_s ||lens(u(s), t(s)) - v(t(s))||_L2 for the nonlinear flows",
            worst,
            cfg.tolerance("lens_composition"),
        );
    }

    let functional = monitored_functional(&lens.spec, &lens.snapshots);
    let rise = functional.windows(2).map(|w| (w[1].1 - w[0].1) / w[0].1.abs()).fold(f64::NEG_INFINITY, f64::max);
    out.le(
        "lens_functional_monotone",
        "max relative increase of cos(2t)^alpha ||v||_Sigma^2 + 2/(p+2) ||v||_{p+2}^{p+2} between samples",
        rise,
        cfg.tolerance("monotone_slack"),
    );
    let exp = classify_exponent(n, p);
    let mut series = Vec::new();
    for &t in &a.dichotomy_times {
        let q = dichotomy_quantity(lens.at(t)?, t, &exp)?;
        out.value(&format!("dichotomy_t{t}"), q);
        series.push(q);
    }
    out.report.verdict(
        "dichotomy_decreasing",
        Verdict::flag("dichotomy quantity decreasing in t (scattering branch)", series.windows(2).all(|w| w[1] < w[0])),
    );
    let mut csv = String::from("time,functional\n");
    for (t, v) in &functional {
        let _ = writeln!(csv, "{t},{v:.17e}");
    }
    out.tables.push(("lens_functional.csv".into(), csv));
    out.diagnostics = lens.records.clone();
    Ok(out)
}

fn moments(cfg: &ScenarioConfig, cache: &RunCache) -> Result<Outcome> {
    let mut out = Outcome::new(cfg);
    let time = cfg.time();
    let run = main_run(cfg, cache, cfg.exponent().p, &[])?;
    let last = *time.extraction.last().expect("validated");
    let phi = scattering_state(run.at(last)?)?;
    out.report.extraction_times = vec![last];
    let reference = 4.0 * gradient_norm_sq(&phi);
    let limit = scattering_limit(&run, geometric_tail(&time.extraction)?)?;
    out.value("variance_limit_extrapolated", 4.0 * gradient_norm_sq(&limit.field));
    let records = configured_records(cfg, &run);
    let rec = run.restricted(&[last]).records.pop().ok_or_else(|| Error::InvalidArgument(format!("no record at {last}")))?;
    out.report.verdict(
        "variance_ratio",
        Verdict::within(
            &format!("renormalized variance at T = {last} / (4 ||grad phi_plus||^2)"),
            rec.renorm_variance / reference,
            cfg.tolerance("variance_ratio_low"),
            cfg.tolerance("variance_ratio_high"),
        ),
    );
    out.le(
        "cone_fraction",
        &format!("cone-exterior moment (R = {}) / renormalized variance at T = {last}", cfg.analysis.cone_radius),
        rec.cone_exterior / rec.renorm_variance,
        cfg.tolerance("cone_fraction"),
    );
    let mut csv = String::from("time,variance,limit_reference\n");
    for r in records.iter().filter(|r| r.time > 0.0) {
        let _ = writeln!(csv, "{},{:.17e},{reference:.17e}", r.time, r.renorm_variance);
    }
    out.tables.push(("moments.csv".into(), csv));
    out.diagnostics = records;
    Ok(out)
}

fn weighted_decay(cfg: &ScenarioConfig, cache: &RunCache) -> Result<Outcome> {
    let mut out = Outcome::new(cfg);
    let times = &cfg.analysis.weighted_times;
    let run = main_run(cfg, cache, cfg.exponent().p, times)?;
    let tail = geometric_tail(&cfg.time().extraction)?;
    out.report.extraction_times = tail.to_vec();
    let limit = scattering_limit(&run, tail)?;
    out.value("phi_plus_extrapolation_tolerance", limit.tolerance);
    let mut csv = String::from("time,weighted_distance\n");
    let mut series = Vec::new();
    for &t in times {
        let d = weighted_distance(run.at(t)?, &limit.field, t)?;
        let _ = writeln!(csv, "{t},{d:.17e}");
        out.value(&format!("weighted_distance_t{t}"), d);
        series.push(d);
    }
    out.report.verdict(
        "weighted_distance_decreasing",
        Verdict::flag("||(|x|/t)(u(t) - e^{it Lap} phi_plus)||_L2 decreasing in t", series.windows(2).all(|w| w[1] < w[0])),
    );
    out.tables.push(("weighted_distance.csv".into(), csv));
    out.states.push(("phi_plus".into(), limit.field));
    out.diagnostics = configured_records(cfg, &run);
    Ok(out)
}

fn endpoint_identity(cfg: &ScenarioConfig, cache: &RunCache) -> Result<Outcome> {
    let mut out = Outcome::new(cfg);
    let time = cfg.time();
    let run = main_run(cfg, cache, cfg.exponent().p, &[1.0])?;
    let tail = geometric_tail(&time.extraction)?;
    out.report.extraction_times = tail.to_vec();
    let phi = scattering_limit(&run, tail)?;
    let pc = pc_run(cfg, cache)?;
    let levels = cfg.analysis.pc_levels();
    let w = pseudo_conformal_limit(&pc, levels)?;
    out.value("phi_plus_extrapolation_tolerance", phi.tolerance);
    out.value("w_plus_extrapolation_tolerance", w.tolerance);
    let raw = identity_residual(&scattering_state(run.at(tail[2])?)?, pc.at(levels[2])?)?;
    out.value("identity_residual_unextrapolated", raw.residual);
    let res = identity_residual(&phi.field, &w.field)?;
    out.report.identity_residuals.insert("extrapolated".into(), res.residual);
    out.report.identity_residuals.insert("unextrapolated".into(), raw.residual);
    out.le(
        "identity_residual",
        "relative L2 residual between phi_plus^ and (2i)^{n/2} conj(w_plus)(2 xi), both sides extrapolated",
        res.residual,
        cfg.tolerance("identity_residual"),
    );
    out.states.push(("phi_plus".into(), phi.field));
    out.states.push(("w_plus".into(), w.field));
    out.diagnostics = configured_records(cfg, &run);
    Ok(out)
}

fn sublevel_certificate(cfg: &ScenarioConfig) -> Result<Outcome> {
    let mut out = Outcome::new(cfg);
    let a = &cfg.analysis;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed());
    let mut csv = String::from("a,b,p,c,d,s_bar,residual_c,residual_d,misclassified\n");
    let (mut worst_residual, mut misclassified, mut all_ok): (f64, usize, bool) = (0.0, 0, true);
    for _ in 0..a.fk_samples {
        let p: f64 = rng.gen_range(0.25..4.0);
        let b: f64 = rng.gen_range(0.1..4.0);
        let bound = (p + 1.0).powf(-1.0 / p) - (p + 1.0).powf(-1.0 - 1.0 / p);
        let a_val = rng.gen_range(0.0..0.95) * bound / b.powf(1.0 / p);
        let st = sublevel_structure(a_val, b, p)?;
        all_ok &= st.threshold_ok;
        let (c, d) = (st.c.unwrap_or(f64::NAN), st.d.unwrap_or(f64::NAN));
        let f = |s: f64| sublevel_function(a_val, b, p, s);
        let (rc, rd) = (f(c).abs(), f(d).abs());
        worst_residual = worst_residual.max(rc).max(rd);
        let top = 2.0 * d;
        let wrong = (0..a.fk_dense)
            .filter(|&j| {
                let s = top * j as f64 / (a.fk_dense - 1) as f64;
                (f(s) <= 0.0) != (s <= c || s >= d)
            })
            .count();
        misclassified += wrong;
        let _ = writeln!(csv, "{a_val:.17e},{b:.17e},{p:.17e},{c:.17e},{d:.17e},{:.17e},{rc:.3e},{rd:.3e},{wrong}", st.s_bar);
    }
    out.report.verdict("fk_threshold_ok", Verdict::flag("every sampled (a, b, p) reported below threshold", all_ok));
    out.le("fk_root_residual", "max |f(c)|, |f(d)| over samples", worst_residual, cfg.tolerance("root_residual"));
    out.le(
        "fk_misclassified",
        &format!("samples of a {}-point dense grid on [0, 2d] where {{f <= 0}} disagrees with [0,c] U [d,inf)", a.fk_dense),
        misclassified as f64,
        0.0,
    );

    let mut poly: f64 = 0.0;
    let mut bracket = true;
    let mut rational = true;
    for n in 1..=10u32 {
        let pn = p_threshold(n);
        poly = poly.max(threshold_polynomial(n, pn).abs());
        bracket &= 2.0 / (n as f64) < pn && pn < 4.0 / n as f64;
        let nn = n as u64;
        rational &= classify_exponent_rational(n, 2, nn).regime == Regime::LongRange
            && classify_exponent_rational(n, 4, nn).regime == Regime::MassCritical
            && classify_exponent_rational(n, 2 * 1_000_000 + 1, nn * 1_000_000).regime == Regime::ShortRangeMassSubcritical
            && classify_exponent_rational(n, 4 * 1_000_000 + 1, nn * 1_000_000).regime == Regime::MassSupercritical;
    }
    out.le("threshold_root_residual", "max_n |n p_n^2 + (n-2) p_n - 4|, n = 1..10", poly, cfg.tolerance("threshold_residual"));
    out.report.verdict("threshold_bracket", Verdict::flag("2/n < p_n < 4/n for n = 1..10", bracket));
    out.report.verdict("rational_boundaries", Verdict::flag("exact regime boundaries at p = 2/n and 4/n", rational));
    out.tables.push(("fk_samples.csv".into(), csv));
    Ok(out)
}

fn rates(cfg: &ScenarioConfig, cache: &RunCache) -> Result<Outcome> {
    let mut out = Outcome::new(cfg);
    let [lo, hi] = cfg.analysis.rate_window;
    let run = main_run(cfg, cache, cfg.exponent().p, &[])?;
    let records = configured_records(cfg, &run);
    let window: Vec<f64> = cfg.time().samples.iter().copied().filter(|t| *t >= lo && *t <= hi).collect();
    let series: Vec<(f64, f64)> = run.restricted(&window).records.iter().map(|r| (r.time, r.gauge_deficit)).collect();
    let fit = rate_fit(&series)?;
    let expected = run.spec.alpha() / 2.0 - 1.0;
    let tol = cfg.tolerance("slope_tolerance");
    out.report.verdict(
        "gauge_deficit_slope",
        Verdict::within(
            &format!("log-log slope of ||grad u - i (x/2t) u|| over [{lo}, {hi}], expected alpha/2 - 1 = {expected}"),
            fit.slope,
            expected - tol,
            expected + tol,
        ),
    );
    out.report.fitted_rates.insert("gauge_deficit".into(), fit);
    out.value("expected_slope", expected);
    let mut csv = String::from("time,deficit\n");
    for (t, d) in &series {
        let _ = writeln!(csv, "{t},{d:.17e}");
    }
    out.tables.push(("rates.csv".into(), csv));
    out.diagnostics = records;
    Ok(out)
}
