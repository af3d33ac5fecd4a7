use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use scatlab::experiment::{
    self, config::set_dotted, emit_plots, exit_status, parse_sweep, run_scenario, RunManifest, ScenarioConfig, EXIT_PASS,
    EXIT_VERDICT_FAILED,
};
use scatlab::Error;

#[derive(Parser)]
#[command(name = "scatlab", version, about = "Run NLS scattering scenarios from TOML configs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario config, or a sweep over one of its keys
    Run {
        config: PathBuf,
        /// Output directory (overrides output.dir)
        #[arg(long)]
        out: Option<PathBuf>,
        /// Sweep one dotted key over values, e.g. exponent.p=2.5,3,3.5
        #[arg(long)]
        sweep: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        /// Only report failures
        #[arg(long)]
        quiet: bool,
        /// Worker threads for sweeps
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
}

fn load(path: &PathBuf, out: Option<&PathBuf>, seed: Option<u64>) -> Result<toml::Table, Error> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config(e.to_string().trim_end().to_string()))?;
    if let Some(seed) = seed {
        let seed = i64::try_from(seed).map_err(|_| Error::Config(format!("seed {seed} too large")))?;
        set_dotted(&mut table, "seed", toml::Value::Integer(seed))?;
    }
    if let Some(out) = out {
        set_dotted(&mut table, "output.dir", toml::Value::String(out.to_string_lossy().into_owned()))?;
    }
    Ok(table)
}

fn report(m: &RunManifest, quiet: bool) {
    for (name, v) in &m.verdicts {
        if quiet && v.pass {
            continue;
        }
        let bound = match v.upper {
            Some(hi) => format!("[{:e}, {:e}]", v.threshold, hi),
            None => format!("{:?} {:e}", v.comparison, v.threshold),
        };
        println!("{} {name}: {:e} {bound}  ({})", if v.pass { "PASS" } else { "FAIL" }, v.value, v.operation);
    }
    if !quiet {
        println!(
            "{}: {} ({:.1}s) -> {}",
            m.scenario,
            if m.passed { "pass" } else { "FAIL" },
            m.timing.wall_seconds,
            m.output_dir.display()
        );
    }
}

fn finish(m: &RunManifest, quiet: bool) -> i32 {
    match emit_plots(m) {
        Ok(files) if !quiet && !files.is_empty() => println!("plots: {} files in {}", files.len(), m.output_dir.display()),
        Ok(_) => {}
        Err(e) => log::warn!("plot tables not written: {e}"),
    }
    report(m, quiet);
    if m.passed {
        EXIT_PASS
    } else {
        EXIT_VERDICT_FAILED
    }
}

fn fail(e: &Error) -> i32 {
    eprintln!("error: {e}");
    exit_status(e)
}

fn run(config: PathBuf, out: Option<PathBuf>, sweep: Option<String>, seed: Option<u64>, quiet: bool, jobs: usize) -> i32 {
    let table = match load(&config, out.as_ref(), seed) {
        Ok(t) => t,
        Err(e) => return fail(&e),
    };
    let Some(spec) = sweep else {
        return match ScenarioConfig::from_table(table).and_then(|cfg| run_scenario(&cfg)) {
            Ok(m) => finish(&m, quiet),
            Err(e) => fail(&e),
        };
    };
    let configs = match parse_sweep(&spec).and_then(|s| {
        let base = ScenarioConfig::from_table(table.clone())?;
        experiment::sweep::expand(&table, &s, &experiment::default_output_dir(&base))
    }) {
        Ok(c) => c,
        Err(e) => return fail(&e),
    };
    let workers = if jobs == 0 { std::thread::available_parallelism().map_or(1, |n| n.get()) } else { jobs };
    let results = experiment::sweep::run_all(&configs, workers, run_scenario);
    let mut status = EXIT_PASS;
    for r in &results {
        let code = match r {
            Ok(m) => finish(m, quiet),
            Err(e) => fail(e),
        };
        // aborts (2..4) outrank verdict failures (1)
        status = status.max(code);
    }
    status
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run { config, out, sweep, seed, quiet, jobs } => run(config, out, sweep, seed, quiet, jobs),
    };
    ExitCode::from(code as u8)
}
