use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponent::{classify_exponent, Regime};
use crate::field::GaussianDatum;
use crate::grid::{make_grid, GridRef};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    FreeCheck,
    Conservation,
    ScatterShortrange,
    LongrangeContrast,
    PseudoconformalLimit,
    LensRoundtrip,
    Moments,
    #[serde(rename = "theorem13")]
    WeightedDecay,
    #[serde(rename = "identity51")]
    EndpointIdentity,
    #[serde(rename = "fk-lemma")]
    SublevelCertificate,
    Rates,
}

impl Scenario {
    pub const ALL: [Scenario; 11] = [
        Scenario::FreeCheck,
        Scenario::Conservation,
        Scenario::ScatterShortrange,
        Scenario::LongrangeContrast,
        Scenario::PseudoconformalLimit,
        Scenario::LensRoundtrip,
        Scenario::Moments,
        Scenario::WeightedDecay,
        Scenario::EndpointIdentity,
        Scenario::SublevelCertificate,
        Scenario::Rates,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::FreeCheck => "free-check",
            Scenario::Conservation => "conservation",
            Scenario::ScatterShortrange => "scatter-shortrange",
            Scenario::LongrangeContrast => "longrange-contrast",
            Scenario::PseudoconformalLimit => "pseudoconformal-limit",
            Scenario::LensRoundtrip => "lens-roundtrip",
            Scenario::Moments => "moments",
            Scenario::WeightedDecay => "theorem13",
            Scenario::EndpointIdentity => "identity51",
            Scenario::SublevelCertificate => "fk-lemma",
            Scenario::Rates => "rates",
        }
    }

    /// Tolerance keys the scenario understands, with their defaults.
    pub fn default_tolerances(self) -> &'static [(&'static str, f64)] {
        match self {
            Scenario::FreeCheck => &[("gaussian_oracle_error", 1e-10)],
            Scenario::Conservation => &[
                ("mass_drift", 1e-10),
                ("energy_drift", 1e-6),
                ("drift_ratio_slack", 0.2),
                ("order_slack", 0.1),
                ("hermite_phase_error", 1e-6),
            ],
            Scenario::ScatterShortrange => &[("cauchy_final_increment", 1e-3), ("lens_cross_check", 1e-4)],
            Scenario::LongrangeContrast => &[("increment_floor", 0.2)],
            Scenario::PseudoconformalLimit => &[("pc_consistency", 1e-4), ("functional_slack", 1e-6)],
            Scenario::LensRoundtrip => {
                &[("lens_identity", 1e-5), ("round_trip", 1e-8), ("lens_composition", 1e-4), ("monotone_slack", 1e-6)]
            }
            Scenario::Moments => &[("variance_ratio_low", 0.95), ("variance_ratio_high", 1.05), ("cone_fraction", 1e-4)],
            Scenario::WeightedDecay => &[],
            Scenario::EndpointIdentity => &[("identity_residual", 1e-2)],
            Scenario::SublevelCertificate => &[("root_residual", 1e-10), ("threshold_residual", 1e-12)],
            Scenario::Rates => &[("slope_tolerance", 0.1)],
        }
    }

    fn needs_field_run(self) -> bool {
        self != Scenario::SublevelCertificate
    }

    fn needs_short_range(self) -> bool {
        matches!(
            self,
            Scenario::ScatterShortrange
                | Scenario::PseudoconformalLimit
                | Scenario::Moments
                | Scenario::WeightedDecay
                | Scenario::EndpointIdentity
                | Scenario::Rates
        )
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub dim: usize,
    pub points: usize,
    pub half_width: f64,
}

impl GridSpec {
    pub fn build(&self) -> Result<GridRef> {
        make_grid(self.dim, self.points, self.half_width).map_err(|e| Error::Config(format!("grid: {e}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExponentSpec {
    pub n: u32,
    pub p: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DatumFamily {
    #[default]
    Gaussian,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DatumSpec {
    pub family: DatumFamily,
    pub amplitude: f64,
    pub width: f64,
    pub center: Vec<f64>,
    pub velocity: Vec<f64>,
}

impl Default for DatumSpec {
    fn default() -> Self {
        DatumSpec { family: DatumFamily::Gaussian, amplitude: 1.0, width: 1.0, center: Vec::new(), velocity: Vec::new() }
    }
}

impl DatumSpec {
    pub fn gaussian(&self) -> GaussianDatum {
        GaussianDatum { amplitude: self.amplitude, width: self.width, center: self.center.clone(), velocity: self.velocity.clone() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSpec {
    pub dt: f64,
    pub horizon: f64,
    /// Diagnostic sample times.
    #[serde(default)]
    pub samples: Vec<f64>,
    /// Times at which scattering states are extracted.
    #[serde(default)]
    pub extraction: Vec<f64>,
}

/// Knobs of the secondary runs and analyses; every field has a default.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisSpec {
    pub cone_radius: f64,
    pub sobolev_index: f64,
    pub weight_fraction: f64,
    pub weighted_dt: f64,
    pub pc_grid: Option<GridSpec>,
    pub lens_grid: Option<GridSpec>,
    /// Smallest pseudo-conformal time; Richardson levels are 4x, 2x and 1x this.
    pub pc_min_time: f64,
    /// Physical times whose pseudo-conformal images are checked against the evolved `w`.
    pub pc_check_times: Vec<f64>,
    pub contrast_p: f64,
    pub lens_check: bool,
    /// Physical times compared against the lens run.
    pub lens_check_times: Vec<f64>,
    pub lens_identity_times: Vec<f64>,
    pub dichotomy_times: Vec<f64>,
    /// Lens-time spacing of the monotonicity samples.
    pub lens_sample_spacing: f64,
    pub rate_window: [f64; 2],
    pub order_dt: f64,
    pub order_horizon: f64,
    pub hermite_time: f64,
    pub weighted_times: Vec<f64>,
    pub fk_samples: usize,
    pub fk_dense: usize,
}

impl Default for AnalysisSpec {
    fn default() -> Self {
        AnalysisSpec {
            cone_radius: 10.0,
            sobolev_index: 1.0,
            weight_fraction: 0.01,
            weighted_dt: 1e-3,
            pc_grid: None,
            lens_grid: None,
            pc_min_time: 1e-4,
            pc_check_times: vec![2.0, 20.0],
            contrast_p: 3.0,
            lens_check: true,
            lens_check_times: vec![0.5, 1.0, 2.0, 20.0, 40.0, 80.0],
            lens_identity_times: vec![0.25, 0.5, 1.0],
            dichotomy_times: vec![0.5, 0.7, 0.77],
            lens_sample_spacing: 0.01,
            rate_window: [10.0, 100.0],
            order_dt: 0.01,
            order_horizon: 0.5,
            hermite_time: 1.0,
            weighted_times: vec![10.0, 20.0, 40.0],
            fk_samples: 100,
            fk_dense: 100_000,
        }
    }
}

impl AnalysisSpec {
    pub fn pc_grid(&self, dim: usize) -> GridSpec {
        self.pc_grid.clone().unwrap_or(GridSpec { dim, points: 512, half_width: 20.0 })
    }

    pub fn lens_grid(&self, dim: usize) -> GridSpec {
        self.lens_grid.clone().unwrap_or(GridSpec { dim, points: 512, half_width: 16.0 })
    }

    pub fn pc_levels(&self) -> [f64; 3] {
        [4.0 * self.pc_min_time, 2.0 * self.pc_min_time, self.pc_min_time]
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default)]
    pub dir: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub grid: Option<GridSpec>,
    #[serde(default)]
    pub exponent: Option<ExponentSpec>,
    #[serde(default)]
    pub datum: DatumSpec,
    #[serde(default)]
    pub time: Option<TimeSpec>,
    #[serde(default)]
    pub analysis: AnalysisSpec,
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    #[serde(default)]
    pub output: OutputSpec,
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl ScenarioConfig {
    /// Parses and validates a TOML document.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| bad(e.to_string().trim_end().to_string()))?;
        Self::from_table(table)
    }

    pub fn from_table(table: toml::Table) -> Result<Self> {
        let cfg: ScenarioConfig = table.try_into().map_err(|e: toml::de::Error| bad(e.to_string().trim_end().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| bad(e.to_string()))
    }

    pub fn tolerance(&self, key: &str) -> f64 {
        self.tolerances.get(key).copied().unwrap_or_else(|| {
            self.scenario
                .default_tolerances()
                .iter()
                .find(|(k, _)| *k == key)
                .map(|(_, v)| *v)
                .unwrap_or_else(|| panic!("unknown tolerance {key} for {}", self.scenario))
        })
    }

    pub fn grid(&self) -> &GridSpec {
        self.grid.as_ref().expect("validated")
    }

    pub fn exponent(&self) -> &ExponentSpec {
        self.exponent.as_ref().expect("validated")
    }

    pub fn time(&self) -> &TimeSpec {
        self.time.as_ref().expect("validated")
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0x5eed)
    }

    pub fn validate(&self) -> Result<()> {
        let sc = self.scenario;
        for key in self.tolerances.keys() {
            if !sc.default_tolerances().iter().any(|(k, _)| k == key) {
                return Err(bad(format!("unknown tolerance '{key}' for scenario {sc}")));
            }
        }
        if let Some((k, v)) = self.tolerances.iter().find(|(_, v)| !(v.is_finite() && **v >= 0.0)) {
            return Err(bad(format!("tolerance '{k}' must be finite and non-negative, got {v}")));
        }
        let a = &self.analysis;
        if sc == Scenario::SublevelCertificate {
            if a.fk_samples == 0 || a.fk_dense < 2 {
                return Err(bad("fk-lemma needs analysis.fk_samples >= 1 and analysis.fk_dense >= 2"));
            }
            return Ok(());
        }
        if !sc.needs_field_run() {
            return Ok(());
        }
        let grid = self.grid.as_ref().ok_or_else(|| bad(format!("scenario {sc} requires a [grid] section")))?;
        let exp = self.exponent.as_ref().ok_or_else(|| bad(format!("scenario {sc} requires an [exponent] section")))?;
        let time = self.time.as_ref().ok_or_else(|| bad(format!("scenario {sc} requires a [time] section")))?;
        grid.build()?;
        if exp.n as usize != grid.dim {
            return Err(bad(format!("exponent.n = {} does not match grid.dim = {}", exp.n, grid.dim)));
        }
        if !(exp.p.is_finite() && exp.p > 0.0) {
            return Err(bad(format!("exponent.p must be positive, got {}", exp.p)));
        }
        let d = &self.datum;
        if !(d.amplitude.is_finite() && d.width.is_finite() && d.width > 0.0) {
            return Err(bad("datum needs a finite amplitude and a positive width"));
        }
        if d.center.len() > grid.dim || d.velocity.len() > grid.dim {
            return Err(bad("datum center/velocity have more entries than grid.dim"));
        }
        if !(time.dt.is_finite() && time.dt > 0.0 && time.horizon.is_finite() && time.horizon > 0.0) {
            return Err(bad("time.dt and time.horizon must be positive"));
        }
        if let Some(t) = time.samples.iter().chain(&time.extraction).find(|t| !(**t > 0.0 && **t <= time.horizon)) {
            return Err(bad(format!("sample time {t} outside (0, horizon = {}]", time.horizon)));
        }
        if !(a.cone_radius > 0.0 && (0.0..=1.0).contains(&a.sobolev_index)) {
            return Err(bad("analysis.cone_radius must be positive and analysis.sobolev_index in [0, 1]"));
        }
        if !(a.weight_fraction > 0.0 && a.weight_fraction <= 1.0 && a.weighted_dt > 0.0) {
            return Err(bad("analysis.weight_fraction must lie in (0, 1] and analysis.weighted_dt be positive"));
        }

        let data = classify_exponent(exp.n, exp.p);
        let n = exp.n;
        if sc.needs_short_range() && !data.is_short_range() {
            return Err(bad(format!(
                "scenario {sc} requires the short-range mass-subcritical regime 2/n < p < 4/n; \
                 p = {} with n = {n} is {}",
                exp.p,
                regime_name(data.regime)
            )));
        }
        match sc {
            Scenario::LongrangeContrast => {
                if data.regime != Regime::LongRange {
                    return Err(bad(format!(
                        "scenario {sc} requires the long-range regime p <= 2/n; p = {} with n = {n} is {}",
                        exp.p,
                        regime_name(data.regime)
                    )));
                }
                if !(a.contrast_p > 0.0 && classify_exponent(n, a.contrast_p).is_short_range()) {
                    return Err(bad(format!("analysis.contrast_p = {} is not short-range for n = {n}", a.contrast_p)));
                }
                require_extraction(self, 3)?;
            }
            Scenario::LensRoundtrip => {
                if !matches!(data.regime, Regime::LongRange | Regime::ShortRangeMassSubcritical) {
                    return Err(bad(format!("scenario {sc} requires a mass-subcritical exponent p < 4/n")));
                }
                if a.lens_sample_spacing <= 0.0 {
                    return Err(bad("analysis.lens_sample_spacing must be positive"));
                }
            }
            Scenario::ScatterShortrange => require_extraction(self, 3)?,
            Scenario::Moments | Scenario::WeightedDecay => {
                require_extraction(self, 3)?;
                if sc == Scenario::WeightedDecay && a.weighted_times.len() < 2 {
                    return Err(bad("theorem13 needs at least two analysis.weighted_times"));
                }
                if let Some(t) = a.weighted_times.iter().find(|t| !(**t > 0.0 && **t <= time.horizon)) {
                    return Err(bad(format!("weighted time {t} outside (0, horizon]")));
                }
            }
            Scenario::EndpointIdentity => require_extraction(self, 3)?,
            Scenario::Rates => {
                let [lo, hi] = a.rate_window;
                let k = time.samples.iter().filter(|t| **t >= lo && **t <= hi).count();
                if k < 5 {
                    return Err(bad(format!("rates needs at least 5 time.samples in [{lo}, {hi}], found {k}")));
                }
            }
            Scenario::Conservation if !(a.order_dt > 0.0 && a.order_horizon > 0.0 && a.order_horizon < 0.5) => {
                return Err(bad("analysis.order_dt must be positive and analysis.order_horizon in (0, 0.5)"));
            }
            _ => {}
        }
        if matches!(sc, Scenario::PseudoconformalLimit | Scenario::EndpointIdentity) {
            if !(a.pc_min_time > 0.0 && 4.0 * a.pc_min_time < 1.0) {
                return Err(bad("analysis.pc_min_time must lie in (0, 0.25)"));
            }
            a.pc_grid(grid.dim).build()?;
        }
        if matches!(sc, Scenario::ScatterShortrange | Scenario::LensRoundtrip | Scenario::Conservation) {
            a.lens_grid(grid.dim).build()?;
        }
        Ok(())
    }
}

fn require_extraction(cfg: &ScenarioConfig, k: usize) -> Result<()> {
    let ex = &cfg.time().extraction;
    if ex.len() < k || ex.windows(2).any(|w| w[1] <= w[0]) {
        return Err(bad(format!("scenario {} requires at least {k} increasing time.extraction entries", cfg.scenario)));
    }
    Ok(())
}

fn regime_name(r: Regime) -> &'static str {
    match r {
        Regime::LongRange => "long-range (p <= 2/n)",
        Regime::ShortRangeMassSubcritical => "short-range mass-subcritical",
        Regime::MassCritical => "mass-critical (p = 4/n)",
        Regime::MassSupercritical => "mass-supercritical (p > 4/n)",
    }
}

/// Sets a dotted key such as `exponent.p` inside a TOML table.
pub fn set_dotted(table: &mut toml::Table, key: &str, value: toml::Value) -> Result<()> {
    let mut parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(bad(format!("malformed key '{key}'")));
    }
    let last = parts.pop().expect("split yields one part");
    let mut cur = table;
    for part in parts {
        let entry = cur.entry(part).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry.as_table_mut().ok_or_else(|| bad(format!("'{part}' in '{key}' is not a section")))?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}
