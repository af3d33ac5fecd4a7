//! `key=a,b,c` parameter sweeps over a base configuration.

use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use crate::error::{Error, Result};

use super::config::{set_dotted, ScenarioConfig};
use super::manifest::RunManifest;

const MAX_SWEEP_VALUES: usize = 256;

#[derive(Clone, Debug, PartialEq)]
pub struct Sweep {
    /// Dotted config key, e.g. `exponent.p`.
    pub key: String,
    pub values: Vec<toml::Value>,
}

fn scalar(text: &str) -> Option<toml::Value> {
    if let Ok(i) = text.parse::<i64>() {
        return Some(toml::Value::Integer(i));
    }
    if let Ok(f) = text.parse::<f64>() {
        return f.is_finite().then_some(toml::Value::Float(f));
    }
    match text {
        "true" => Some(toml::Value::Boolean(true)),
        "false" => Some(toml::Value::Boolean(false)),
        _ if text.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_') => Some(toml::Value::String(text.into())),
        _ => None,
    }
}

pub fn parse_sweep(spec: &str) -> Result<Sweep> {
    let (key, list) = spec.split_once('=').ok_or_else(|| Error::Config(format!("sweep '{spec}' is not key=a,b,c")))?;
    let key = key.trim();
    let valid_key =
        !key.is_empty() && key.split('.').all(|part| !part.is_empty() && part.chars().all(|c| c.is_ascii_alphanumeric() || c == '_'));
    if !valid_key {
        return Err(Error::Config(format!("malformed sweep key '{key}'")));
    }
    let values = list
        .split(',')
        .map(|v| {
            let v = v.trim();
            scalar(v).filter(|_| !v.is_empty()).ok_or_else(|| Error::Config(format!("bad sweep value '{v}'")))
        })
        .collect::<Result<Vec<_>>>()?;
    if values.len() > MAX_SWEEP_VALUES {
        return Err(Error::Config(format!("sweep has more than {MAX_SWEEP_VALUES} values")));
    }
    Ok(Sweep { key: key.to_string(), values })
}

fn label(v: &toml::Value) -> String {
    match v {
        toml::Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// One validated config per sweep value, each writing under `root/<key>=<value>`.
pub fn expand(base: &toml::Table, sweep: &Sweep, root: &Path) -> Result<Vec<ScenarioConfig>> {
    sweep
        .values
        .iter()
        .map(|v| {
            let mut table = base.clone();
            set_dotted(&mut table, &sweep.key, v.clone())?;
            let dir = root.join(format!("{}={}", sweep.key, label(v)));
            set_dotted(&mut table, "output.dir", toml::Value::String(dir.to_string_lossy().into_owned()))?;
            ScenarioConfig::from_table(table)
        })
        .collect()
}

/// Runs independent configs on up to `workers` threads; results keep input order.
pub fn run_all<F>(configs: &[ScenarioConfig], workers: usize, run: F) -> Vec<Result<RunManifest>>
where
    F: Fn(&ScenarioConfig) -> Result<RunManifest> + Sync,
{
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<Result<RunManifest>>>> = Mutex::new((0..configs.len()).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..workers.clamp(1, configs.len().max(1)) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(cfg) = configs.get(i) else { break };
                let r = run(cfg);
                results.lock().expect("sweep results poisoned")[i] = Some(r);
            });
        }
    });
    results.into_inner().expect("sweep results poisoned").into_iter().map(|r| r.expect("every index ran")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_typed_values() {
        let s = parse_sweep("exponent.p=2.5, 3,3.5").unwrap();
        assert_eq!(s.key, "exponent.p");
        assert_eq!(s.values, vec![toml::Value::Float(2.5), toml::Value::Integer(3), toml::Value::Float(3.5)]);
        let b = parse_sweep("analysis.lens_check=true,false").unwrap();
        assert_eq!(b.values[1], toml::Value::Boolean(false));
        for bad in ["", "p", "=1", "a..b=1", "p=", "p=1,,2", "p=1;2", "p=nan"] {
            assert!(parse_sweep(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn expands_into_separate_directories() {
        let base: toml::Table = "scenario = \"fk-lemma\"\n".parse().unwrap();
        let sweep = parse_sweep("seed=1,2,3").unwrap();
        let cfgs = expand(&base, &sweep, Path::new("/tmp/sw")).unwrap();
        assert_eq!(cfgs.len(), 3);
        assert_eq!(cfgs[1].seed, Some(2));
        assert_eq!(cfgs[2].output.dir.as_deref(), Some(Path::new("/tmp/sw/seed=3")));
        assert!(expand(&base, &parse_sweep("seed=x").unwrap(), Path::new("/tmp")).is_err());
    }

    proptest! {
        #[test]
        fn parser_never_panics(s in ".{0,80}") {
            let _ = parse_sweep(&s);
        }
    }
}
