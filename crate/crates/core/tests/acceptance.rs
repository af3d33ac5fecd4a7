//! Acceptance suite: one PASS/FAIL line per criterion, thresholds pinned
//! here rather than read from the scenario templates.
//!
//! Criteria in `KNOWN_RED` are reported as FAIL without failing the target;
//! any other failure, or a run that aborts, exits non-zero. Set
//! `SCATLAB_ACCEPTANCE_STRICT=1` to fail on every FAIL line.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use scatlab::experiment::{analyze, run_scenario_with, RunCache, RunManifest, Scenario, ScenarioConfig};
use scatlab::scattering::Verdict;

const SCENARIO_DIR: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../scenarios");
const SCATTER_RUNTIME_LIMIT_S: f64 = 20.0 * 60.0;
/// Criteria the reference configuration does not meet at desk scale.
const KNOWN_RED: [u32; 3] = [6, 7, 10];

fn template(name: &str) -> ScenarioConfig {
    let path = Path::new(SCENARIO_DIR).join(format!("{name}.toml"));
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    let cfg = ScenarioConfig::from_toml_str(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
    cfg.validate().unwrap_or_else(|e| panic!("{name}: {e}"));
    cfg
}

fn union(sets: &[&[f64]]) -> Vec<f64> {
    let mut all: Vec<f64> = sets.concat();
    all.sort_by(f64::total_cmp);
    all.dedup();
    all
}

/// Every physical time any scenario below asks of the run with this config.
fn requested_times(cfg: &ScenarioConfig) -> Vec<f64> {
    let (time, a) = (cfg.time(), &cfg.analysis);
    let checks: Vec<f64> = a.lens_check_times.iter().chain(&a.pc_check_times).copied().filter(|s| *s <= time.horizon).collect();
    union(&[&time.samples, &time.extraction, &checks, &a.weighted_times, &[1.0]])
}

struct Line {
    pass: bool,
    detail: String,
}

type Verdicts = BTreeMap<String, Verdict>;

fn value(v: &Verdicts, name: &str) -> f64 {
    v.get(name).unwrap_or_else(|| panic!("verdict {name} missing")).value
}

fn flag(v: &Verdicts, name: &str) -> bool {
    v.get(name).unwrap_or_else(|| panic!("verdict {name} missing")).pass
}

type Analysed = Result<(Verdicts, f64), String>;

/// Each scenario is analysed once; later criteria reuse its verdicts.
struct Outcomes<'a> {
    cache: &'a RunCache,
    done: RefCell<BTreeMap<&'static str, Analysed>>,
}

impl Outcomes<'_> {
    fn get(&self, cfg: &ScenarioConfig) -> Analysed {
        let name = cfg.scenario.name();
        if let Some(hit) = self.done.borrow().get(name) {
            return hit.clone();
        }
        let started = Instant::now();
        let out = analyze(cfg, self.cache)
            .map(|o| (o.report.verdicts, started.elapsed().as_secs_f64()))
            .map_err(|e| format!("{name} aborted: {e}"));
        self.done.borrow_mut().insert(name, out.clone());
        out
    }
}

fn le(v: f64, bound: f64) -> bool {
    v.is_finite() && v <= bound
}

fn within(v: f64, lo: f64, hi: f64) -> bool {
    v >= lo && v <= hi
}

fn free_flow(cfg: &ScenarioConfig, v: &Verdicts) -> Line {
    let g = cfg.grid();
    let box_ok = g.dim == 1 && g.points == 1024 && (g.half_width - 40.0 * std::f64::consts::PI).abs() < 1e-9;
    let err = value(v, "gaussian_oracle_error");
    Line { pass: box_ok && le(err, 1e-10), detail: format!("max L2 error {err:.3e} <= 1e-10 on N=1024, L=40pi") }
}

fn conservation(v: &Verdicts) -> Line {
    let (m, e, r) = (value(v, "mass_drift"), value(v, "energy_drift"), value(v, "energy_drift_ratio"));
    Line {
        pass: le(m, 1e-10) && le(e, 1e-6) && within(r, 3.2, 4.8),
        detail: format!("mass drift {m:.2e} <= 1e-10, energy drift {e:.2e} <= 1e-6, halving ratio {r:.4} in [3.2, 4.8]"),
    }
}

fn orders(v: &Verdicts) -> Line {
    let names = ["order_physical", "order_pseudo_conformal", "order_lens"];
    let values: Vec<f64> = names.iter().map(|n| value(v, n)).collect();
    Line {
        pass: values.iter().all(|o| within(*o, 1.9, 2.1)),
        detail: format!("orders {:.4} / {:.4} / {:.4} (physical / pseudo-conformal / lens) in [1.9, 2.1]", values[0], values[1], values[2]),
    }
}

fn hermite(v: &Verdicts) -> Line {
    let (g, f) = (value(v, "hermite_ground_phase_error"), value(v, "hermite_first_phase_error"));
    Line { pass: le(g, 1e-6) && le(f, 1e-6), detail: format!("ground {g:.2e}, first excited {f:.2e} <= 1e-6 at t=1") }
}

fn lens_identity(cfg: &ScenarioConfig, v: &Verdicts) -> Line {
    let times_ok = cfg.analysis.lens_identity_times == [0.25, 0.5, 1.0];
    let e = value(v, "lens_identity");
    Line { pass: times_ok && le(e, 1e-5), detail: format!("max error {e:.2e} <= 1e-5 over s in {:?}", cfg.analysis.lens_identity_times) }
}

fn scattering(cfg: &ScenarioConfig, v: &Verdicts, seconds: f64) -> Line {
    let times_ok = cfg.time().extraction == [10.0, 20.0, 40.0, 80.0] && cfg.analysis.lens_check;
    let decreasing = flag(v, "cauchy_strictly_decreasing");
    let last = value(v, "cauchy_final_increment");
    let cross = flag(v, "lens_cross_check");
    Line {
        pass: times_ok && decreasing && le(last, 1e-3) && cross && seconds <= SCATTER_RUNTIME_LIMIT_S,
        detail: format!(
            "strictly decreasing {decreasing}, final increment {last:.3e} <= 1e-3, lens cross-check {} ({:.2e}), {seconds:.0} s <= 1200 s",
            if cross { "ok" } else { "failed" },
            value(v, "lens_cross_check"),
        ),
    }
}

fn rate(v: &Verdicts) -> Line {
    let s = value(v, "gauge_deficit_slope");
    Line { pass: within(s, -0.85, -0.65), detail: format!("slope {s:.4} in [-0.85, -0.65] over t in [10, 100]") }
}

fn moments(v: &Verdicts) -> Line {
    let (r, c) = (value(v, "variance_ratio"), value(v, "cone_fraction"));
    Line {
        pass: within(r, 0.95, 1.05) && le(c, 1e-4),
        detail: format!("variance ratio {r:.4} in [0.95, 1.05], cone fraction {c:.2e} <= 1e-4"),
    }
}

fn identity(v: &Verdicts) -> Line {
    let r = value(v, "identity_residual");
    Line { pass: le(r, 1e-2), detail: format!("relative residual {r:.3e} <= 1e-2") }
}

fn contrast(cfg: &ScenarioConfig, v: &Verdicts) -> Line {
    let setup_ok = cfg.exponent().p == 2.0 && cfg.analysis.contrast_p == 3.0 && cfg.time().extraction == [10.0, 20.0, 40.0, 80.0];
    let (long, short) = (value(v, "longrange_increment_floor"), value(v, "shortrange_increment_decay"));
    Line {
        pass: setup_ok && long >= 0.2 && short < 0.2,
        detail: format!("min increment ratio p=2 {long:.3} >= 0.2 and p=3 {short:.3} < 0.2"),
    }
}

fn exponent_algebra(v: &Verdicts) -> Line {
    let r = value(v, "threshold_root_residual");
    let (bracket, rational) = (flag(v, "threshold_bracket"), flag(v, "rational_boundaries"));
    Line {
        pass: le(r, 1e-12) && bracket && rational,
        detail: format!("root residual {r:.2e} <= 1e-12, bracket {bracket}, rational boundaries {rational}"),
    }
}

fn sublevel(cfg: &ScenarioConfig, v: &Verdicts) -> Line {
    let sizes_ok = cfg.analysis.fk_samples == 100 && cfg.analysis.fk_dense == 100_000;
    let (wrong, res, ok) = (value(v, "fk_misclassified"), value(v, "fk_root_residual"), flag(v, "fk_threshold_ok"));
    Line {
        pass: sizes_ok && ok && wrong == 0.0 && le(res, 1e-10),
        detail: format!("{wrong} misclassified dense samples, endpoint residual {res:.2e} <= 1e-10, all below threshold {ok}"),
    }
}

fn monotone(v: &Verdicts) -> Line {
    let m = value(v, "lens_functional_monotone");
    Line { pass: le(m, 1e-6), detail: format!("max relative increase {m:.2e} <= 1e-6") }
}

fn determinism(names: &[&str], root: &Path) -> Result<Line, String> {
    let mut differing = Vec::new();
    for name in names {
        let mut files = Vec::new();
        for pass in ["a", "b"] {
            let mut cfg = template(name);
            cfg.output.dir = Some(root.join(format!("{name}-{pass}")));
            let m: RunManifest = run_scenario_with(&cfg, &RunCache::new()).map_err(|e| format!("{name}: {e}"))?;
            files.push(m.files);
        }
        if files[0] != files[1] || files[0].is_empty() {
            differing.push(*name);
        }
    }
    Ok(Line {
        pass: differing.is_empty(),
        detail: if differing.is_empty() {
            format!("identical CSV/JSON digests on rerun of {}", names.join(", "))
        } else {
            format!("digests differ for {}", differing.join(", "))
        },
    })
}

fn main() -> ExitCode {
    let cache = RunCache::new();
    let cfg: BTreeMap<&str, ScenarioConfig> = Scenario::ALL.iter().map(|s| (s.name(), template(s.name()))).collect();

    // One reference run per exponent covers every physical scenario.
    let reference = ["scatter-shortrange", "moments", "theorem13", "identity51", "rates", "pseudoconformal-limit", "longrange-contrast"];
    let p3_times =
        union(&reference.iter().map(|n| requested_times(&cfg[n])).collect::<Vec<_>>().iter().map(Vec::as_slice).collect::<Vec<_>>());
    let scatter = &cfg["scatter-shortrange"];
    let contrast_cfg = &cfg["longrange-contrast"];
    let started = Instant::now();
    let warm = std::thread::scope(|s| {
        let p2 = s.spawn(|| {
            let c = contrast_cfg;
            cache.physical(c.grid(), &c.datum.gaussian(), c.exponent().p, c.time().dt, &requested_times(c), c.analysis.cone_radius)
        });
        let p3 = cache.physical(scatter.grid(), &scatter.datum.gaussian(), 3.0, scatter.time().dt, &p3_times, scatter.analysis.cone_radius);
        p3.and(p2.join().expect("warm-up thread panicked"))
    });
    let warm_seconds = started.elapsed().as_secs_f64();
    if let Err(e) = warm {
        println!("reference runs aborted: {e}");
        return ExitCode::FAILURE;
    }
    println!("reference runs (p = 3 to t = {}, p = 2 to t = 80): {warm_seconds:.0} s", p3_times.last().unwrap());

    let scratch = tempfile::tempdir().expect("temp dir");
    let root: PathBuf = scratch.path().to_path_buf();
    let runs = Outcomes { cache: &cache, done: RefCell::new(BTreeMap::new()) };
    let v = |name: &str| runs.get(&cfg[name]).map(|(v, _)| v);
    type Check<'a> = Box<dyn Fn() -> Result<Line, String> + 'a>;
    let criteria: Vec<(u32, &str, Check)> = vec![
        (1, "free-flow Gaussian oracle", Box::new(|| Ok(free_flow(&cfg["free-check"], &v("free-check")?)))),
        (2, "mass and energy conservation", Box::new(|| Ok(conservation(&v("conservation")?)))),
        (3, "splitting order", Box::new(|| Ok(orders(&v("conservation")?)))),
        (4, "Hermite phases", Box::new(|| Ok(hermite(&v("conservation")?)))),
        (5, "lens identity", Box::new(|| Ok(lens_identity(&cfg["lens-roundtrip"], &v("lens-roundtrip")?)))),
        (
            6,
            "scattering Cauchy increments",
            Box::new(|| {
                // the shared reference run is charged to this criterion
                let (verdicts, secs) = runs.get(scatter)?;
                Ok(scattering(scatter, &verdicts, secs + warm_seconds))
            }),
        ),
        (7, "gauge-deficit rate", Box::new(|| Ok(rate(&v("rates")?)))),
        (8, "variance and cone moments", Box::new(|| Ok(moments(&v("moments")?)))),
        (9, "endpoint identity", Box::new(|| Ok(identity(&v("identity51")?)))),
        (10, "long-range contrast", Box::new(|| Ok(contrast(contrast_cfg, &v("longrange-contrast")?)))),
        (11, "exponent algebra", Box::new(|| Ok(exponent_algebra(&v("fk-lemma")?)))),
        (12, "sublevel certificate", Box::new(|| Ok(sublevel(&cfg["fk-lemma"], &v("fk-lemma")?)))),
        (13, "lens functional monotone", Box::new(|| Ok(monotone(&v("lens-roundtrip")?)))),
        (14, "determinism", Box::new(|| determinism(&["free-check", "fk-lemma", "conservation", "lens-roundtrip"], &root))),
    ];

    let strict = std::env::var("SCATLAB_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    let (mut failed, mut blocking) = (0, 0);
    for (id, title, check) in &criteria {
        let started = Instant::now();
        let (line, aborted) = match check() {
            Ok(line) => (line, false),
            Err(e) => (Line { pass: false, detail: e }, true),
        };
        if !line.pass {
            failed += 1;
            if strict || aborted || !KNOWN_RED.contains(id) {
                blocking += 1;
            }
        }
        println!(
            "criterion {id:2}: {} {title}: {} [{:.1} s]",
            if line.pass { "PASS" } else { "FAIL" },
            line.detail,
            started.elapsed().as_secs_f64()
        );
    }
    println!("{} of {} criteria pass; known red: {KNOWN_RED:?}", criteria.len() - failed, criteria.len());
    if blocking == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
