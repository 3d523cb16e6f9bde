mod experiments;
mod params;
mod record;

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use params::{parse_value, Params};
use record::Record;

#[derive(Debug)]
pub enum Failure {
    /// Exit code 2.
    Usage(String),
    /// Exit code 1; the message names the violated assertion.
    Contract(String),
}

impl From<qtlab_core::Error> for Failure {
    fn from(e: qtlab_core::Error) -> Self {
        use qtlab_core::Error as E;
        match e {
            E::Contract(_) | E::Precondition(_) | E::SearchFailed(_) | E::NoRelation { .. } | E::Degenerate(_) => {
                Failure::Contract(e.to_string())
            }
            _ => Failure::Usage(e.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(name = "qtlab", version, about = "Run and replay quantitative transversality experiments")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a named experiment and print a JSON report.
    ///
    /// Parameters are given as `--key value` pairs after the experiment name
    /// and override those of the configuration file.
    Run {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Append the result row to this CSV file.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Experiment name (optional with a config file) followed by parameters.
        #[arg(trailing_var_arg = true, allow_hyphen_values = true, value_name = "EXPERIMENT [--KEY VALUE]")]
        args: Vec<String>,
    },
    /// Re-run rows of a results CSV and compare the estimates bit for bit.
    Replay {
        csv: PathBuf,
        /// Zero-based row index; all rows when omitted.
        #[arg(long)]
        row: Option<usize>,
    },
}

struct RunSpec {
    experiment: String,
    seed: Option<u64>,
    out: Option<PathBuf>,
    given: BTreeMap<String, Value>,
}

fn usage<T>(msg: impl Into<String>) -> Result<T, Failure> {
    Err(Failure::Usage(msg.into()))
}

fn as_seed(v: &Value) -> Result<u64, Failure> {
    v.as_u64().ok_or_else(|| Failure::Usage(format!("seed must be a non-negative integer, got {v}")))
}

fn resolve(config: Option<PathBuf>, seed: Option<u64>, out: Option<PathBuf>, args: Vec<String>) -> Result<RunSpec, Failure> {
    let mut flags = args;
    let experiment = match flags.first() {
        Some(a) if !a.starts_with("--") => Some(flags.remove(0)),
        _ => None,
    };
    let mut spec = RunSpec { experiment: String::new(), seed: None, out: None, given: BTreeMap::new() };
    let mut config = config;
    let mut from_flags = BTreeMap::new();
    let mut it = flags.into_iter();
    while let Some(tok) = it.next() {
        let Some(key) = tok.strip_prefix("--") else {
            return usage(format!("expected `--key value`, got `{tok}`"));
        };
        let (key, raw) = match key.split_once('=') {
            Some((k, v)) => (k.to_string(), v.to_string()),
            None => match it.next() {
                Some(v) => (key.to_string(), v),
                None => return usage(format!("flag `--{key}` needs a value")),
            },
        };
        from_flags.insert(key.replace('-', "_"), raw);
    }
    if let Some(c) = from_flags.remove("config") {
        config = Some(PathBuf::from(c));
    }
    if let Some(path) = &config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Usage(format!("cannot read config {}: {e}", path.display())))?;
        let table: toml::Table =
            text.parse().map_err(|e| Failure::Usage(format!("cannot parse config {}: {e}", path.display())))?;
        for (k, v) in table {
            let v = serde_json::to_value(v).map_err(|e| Failure::Usage(e.to_string()))?;
            match k.as_str() {
                "experiment" => spec.experiment = v.as_str().unwrap_or_default().to_string(),
                "seed" => spec.seed = Some(as_seed(&v)?),
                "out" => spec.out = v.as_str().map(PathBuf::from),
                _ => {
                    spec.given.insert(k.replace('-', "_"), v);
                }
            }
        }
    }
    if let Some(e) = experiment {
        spec.experiment = e;
    }
    if let Some(s) = from_flags.remove("seed") {
        spec.seed = Some(as_seed(&parse_value(&s))?);
    }
    if let Some(o) = from_flags.remove("out") {
        spec.out = Some(PathBuf::from(o));
    }
    if seed.is_some() {
        spec.seed = seed;
    }
    if out.is_some() {
        spec.out = out;
    }
    for (k, raw) in from_flags {
        spec.given.insert(k, parse_value(&raw));
    }
    if spec.experiment.is_empty() {
        return usage(format!("no experiment given; registered: {}", experiments::REGISTERED.join(", ")));
    }
    if !experiments::REGISTERED.contains(&spec.experiment.as_str()) {
        return usage(format!(
            "unknown experiment `{}`; registered: {}",
            spec.experiment,
            experiments::REGISTERED.join(", ")
        ));
    }
    if experiments::needs_seed(&spec.experiment) && spec.seed.is_none() {
        return usage(format!("experiment `{}` needs an explicit --seed", spec.experiment));
    }
    Ok(spec)
}

fn execute(experiment: &str, given: BTreeMap<String, Value>, seed: Option<u64>) -> Result<Record, Failure> {
    let mut p = Params::new(given);
    let outcome = experiments::run(experiment, &mut p, seed.unwrap_or(0));
    // Unknown parameters are reported before any contract outcome.
    let used = p.finish()?;
    let o = outcome?;
    Ok(Record {
        experiment: experiment.to_string(),
        params: used,
        estimate: o.estimate,
        stderr: o.stderr,
        n_samples: o.n_samples,
        seed,
        report: o.report,
    })
}

/// Print to stdout; a closed pipe is not an error.
fn emit(v: &Value) {
    let _ = writeln!(std::io::stdout().lock(), "{}", serde_json::to_string_pretty(v).unwrap());
}

fn cmd_run(spec: RunSpec) -> Result<(), Failure> {
    let rec = execute(&spec.experiment, spec.given, spec.seed)?;
    if let Some(path) = &spec.out {
        record::append(path, &rec).map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display())))?;
    }
    emit(&rec.to_json());
    Ok(())
}

fn cmd_replay(path: &Path, row: Option<usize>) -> Result<(), Failure> {
    let rows = record::read(path).map_err(Failure::Usage)?;
    let selected: Vec<usize> = match row {
        Some(i) if i < rows.len() => vec![i],
        Some(i) => return usage(format!("row {i} out of range; the file has {} rows", rows.len())),
        None => (0..rows.len()).collect(),
    };
    let mut results = Vec::new();
    for i in selected {
        let old = &rows[i];
        let new = execute(&old.experiment, old.params.clone(), old.seed)?;
        let identical = old.estimate.to_bits() == new.estimate.to_bits()
            && old.stderr.to_bits() == new.stderr.to_bits()
            && old.n_samples == new.n_samples;
        results.push(json!({
            "row": i,
            "experiment": old.experiment,
            "identical": identical,
            "status": if identical { "identical" } else { "different run" },
            "recorded": old.estimate,
            "replayed": new.estimate,
        }));
    }
    emit(&Value::Array(results));
    Ok(())
}

fn init_threads() -> Result<(), Failure> {
    if let Ok(v) = std::env::var("QTLAB_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| Failure::Usage(format!("QTLAB_THREADS must be a positive integer, got `{v}`")))?;
        if n == 0 {
            return usage("QTLAB_THREADS must be positive");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| Failure::Usage(e.to_string()))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = init_threads().and_then(|_| match cli.cmd {
        Cmd::Run { config, seed, out, args } => resolve(config, seed, out, args).and_then(cmd_run),
        Cmd::Replay { csv, row } => cmd_replay(&csv, row),
    });
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Contract(m)) => {
            eprintln!("contract violation: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(m)) => {
            eprintln!("usage error: {m}");
            ExitCode::from(2)
        }
    }
}
