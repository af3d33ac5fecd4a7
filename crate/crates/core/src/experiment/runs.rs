//! Trajectories shared between analyses, memoised by their defining inputs.

use std::sync::{Arc, Mutex};

use crate::diagnostics::DiagnosticRecord;
use crate::error::{Error, Result};
use crate::field::{GaussianDatum, WaveField};
use crate::propagate::{evolve, EquationSpec, Sampling, StepPolicy, Variant};
use crate::scattering::{richardson, scattering_state, Extrapolated};
use crate::transforms::{pseudo_conformal_transform, time_map};

use super::config::GridSpec;

/// Snapshots and diagnostics sampled along one run.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub spec: EquationSpec,
    pub snapshots: Vec<WaveField>,
    pub records: Vec<DiagnosticRecord>,
    pub steps: usize,
}

fn same_time(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

impl Trajectory {
    pub fn at(&self, t: f64) -> Result<&WaveField> {
        self.snapshots.iter().find(|f| same_time(f.time, t)).ok_or_else(|| Error::InvalidArgument(format!("no snapshot at time {t}")))
    }

    fn covers(&self, times: &[f64]) -> bool {
        times.iter().all(|&t| self.snapshots.iter().any(|f| same_time(f.time, t)))
    }

    /// The samples at `times`, in the order of the run.
    pub fn restricted(&self, times: &[f64]) -> Trajectory {
        let keep = |t: f64| times.iter().any(|&s| same_time(s, t));
        Trajectory {
            spec: self.spec,
            snapshots: self.snapshots.iter().filter(|f| keep(f.time)).cloned().collect(),
            records: self.records.iter().filter(|r| keep(r.time)).cloned().collect(),
            steps: self.steps,
        }
    }
}

/// A run is identified by its equation, start field recipe and stepping.
#[derive(Clone, Debug, PartialEq)]
struct RunKey(String);

#[derive(Default)]
pub struct RunCache {
    entries: Mutex<Vec<(RunKey, Arc<Trajectory>)>>,
}

fn merged(times: &[f64], end: f64) -> Vec<f64> {
    let mut all: Vec<f64> = times.to_vec();
    all.push(end);
    all.sort_by(f64::total_cmp);
    all.dedup_by(|a, b| same_time(*a, *b));
    all
}

impl RunCache {
    pub fn new() -> Self {
        Self::default()
    }

    fn lookup(&self, key: &RunKey, times: &[f64]) -> Option<Arc<Trajectory>> {
        let entries = self.entries.lock().expect("run cache poisoned");
        entries.iter().find(|(k, t)| k == key && t.covers(times)).map(|(_, t)| t.clone())
    }

    fn get_or_run<F>(&self, key: RunKey, times: &[f64], run: F) -> Result<Arc<Trajectory>>
    where
        F: FnOnce() -> Result<Trajectory>,
    {
        if let Some(hit) = self.lookup(&key, times) {
            return Ok(hit);
        }
        let traj = Arc::new(run()?);
        self.entries.lock().expect("run cache poisoned").push((key, traj.clone()));
        Ok(traj)
    }

    /// Physical run from the sampled datum up to the largest of `times`.
    pub fn physical(
        &self,
        grid: &GridSpec,
        datum: &GaussianDatum,
        p: f64,
        dt: f64,
        times: &[f64],
        cone_radius: f64,
    ) -> Result<Arc<Trajectory>> {
        let end = times.iter().copied().fold(0.0, f64::max);
        let times = merged(times, end);
        let key = RunKey(format!("physical {grid:?} {datum:?} p={p:e} dt={dt:e} R={cone_radius:e}"));
        self.get_or_run(key, &times, || {
            let g = grid.build()?;
            let spec = EquationSpec::new(Variant::PhysicalNls, grid.dim as u32, p);
            sampled_run(&spec, &datum.sample(&g), end, &StepPolicy::uniform(dt), &times, cone_radius)
        })
    }

    /// Lens run of the sampled datum; `times` are lens times in `[0, pi/4)`.
    pub fn lens(&self, grid: &GridSpec, datum: &GaussianDatum, p: f64, dt: f64, fraction: f64, times: &[f64]) -> Result<Arc<Trajectory>> {
        let end = times.iter().copied().fold(0.0, f64::max);
        let times = merged(times, end);
        let key = RunKey(format!("lens {grid:?} {datum:?} p={p:e} dt={dt:e} k={fraction:e} end={end:e}"));
        self.get_or_run(key, &times, || {
            let g = grid.build()?;
            let spec = EquationSpec::new(Variant::Lens, grid.dim as u32, p);
            let policy = StepPolicy::budgeted(&spec, 0.0, end, dt, fraction);
            sampled_run(&spec, &datum.sample(&g), end, &policy, &times, 10.0)
        })
    }

    /// Pseudo-conformal run started from the transform of the physical state
    /// at time 1, integrated down to the smallest of `times`.
    #[allow(clippy::too_many_arguments)]
    pub fn pseudo_conformal(
        &self,
        physical_grid: &GridSpec,
        datum: &GaussianDatum,
        p: f64,
        physical_dt: f64,
        grid: &GridSpec,
        dt: f64,
        fraction: f64,
        times: &[f64],
    ) -> Result<Arc<Trajectory>> {
        let end = times.iter().copied().fold(1.0, f64::min);
        let times = merged(&[times, &[1.0]].concat(), end);
        let key = RunKey(format!(
            "pseudo-conformal {physical_grid:?} {datum:?} p={p:e} pdt={physical_dt:e} {grid:?} dt={dt:e} k={fraction:e} end={end:e}"
        ));
        self.get_or_run(key, &times, || {
            let phys = self.physical(physical_grid, datum, p, physical_dt, &[1.0], 10.0)?;
            let w1 = pseudo_conformal_transform(phys.at(1.0)?, &grid.build()?)?;
            let spec = EquationSpec::new(Variant::PseudoConformal, grid.dim as u32, p);
            let policy = StepPolicy::budgeted(&spec, 1.0, end, dt, fraction);
            sampled_run(&spec, &w1, end, &policy, &times, 10.0)
        })
    }
}

fn sampled_run(spec: &EquationSpec, f0: &WaveField, end: f64, policy: &StepPolicy, times: &[f64], cone_radius: f64) -> Result<Trajectory> {
    let mut snapshots = Vec::with_capacity(times.len());
    let sampling = Sampling { times: times.to_vec(), cone_radius };
    let out = evolve(spec, f0, end, policy, &sampling, |f, _| snapshots.push(f.clone()))?;
    Ok(Trajectory { spec: *spec, snapshots, records: out.records, steps: out.steps })
}

/// Richardson exponents for the endpoint limits: leading `h^{1-alpha}`, then `h^{min(1, 2-2 alpha)}`.
pub fn endpoint_exponents(alpha: f64) -> (f64, f64) {
    (1.0 - alpha, (2.0 - 2.0 * alpha).min(1.0))
}

/// Extrapolated scattering state from the last three extraction times (ratio 2).
pub fn scattering_limit(traj: &Trajectory, times: [f64; 3]) -> Result<Extrapolated> {
    let states = times.iter().map(|&t| scattering_state(traj.at(t)?)).collect::<Result<Vec<_>>>()?;
    richardson([&states[0], &states[1], &states[2]], endpoint_exponents(traj.spec.alpha()))
}

/// Extrapolated pseudo-conformal endpoint `w(0+)` from three geometric levels.
pub fn pseudo_conformal_limit(traj: &Trajectory, levels: [f64; 3]) -> Result<Extrapolated> {
    let w = levels.iter().map(|&t| traj.at(t)).collect::<Result<Vec<_>>>()?;
    richardson([w[0], w[1], w[2]], endpoint_exponents(traj.spec.alpha()))
}

/// Last three entries of a list that must be in geometric ratio 2.
pub fn geometric_tail(times: &[f64]) -> Result<[f64; 3]> {
    match times {
        [.., a, b, c] if same_time(2.0 * a, *b) && same_time(2.0 * b, *c) => Ok([*a, *b, *c]),
        _ => Err(Error::Config(format!("the last three extraction times must double, got {times:?}"))),
    }
}

pub fn lens_times(physical: &[f64]) -> Vec<f64> {
    physical.iter().map(|&s| time_map(s)).collect()
}
