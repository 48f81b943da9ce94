//! Thin CLI over the harness.
//!
//! ```text
//! optoco run    --config <file.json> --out <dir>
//! optoco sweep  --config <file.json> --axis <name> --values <v1,v2,...> --out <dir>
//! optoco verify --trace <dir/trace.csv>
//! ```
//!
//! Exit codes: 0 = all checks pass, 1 = a bound check failed, 2 = config or
//! usage error.

use std::path::PathBuf;
use std::process::ExitCode;

use optoco::harness::{self, HarnessError, RunConfig};

const USAGE: &str = "usage:
  optoco run    --config <file.json> --out <dir>
  optoco sweep  --config <file.json> --axis <name> --values <v1,v2,...> --out <dir>
  optoco verify --trace <dir/trace.csv>

sweep axes: noise | horizon | eta | seed | drift
exit codes: 0 = all checks pass, 1 = a check failed, 2 = config error";

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    match dispatch(&args) {
        Ok(passed) => {
            if passed {
                ExitCode::from(0)
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            if matches!(e, CliError::Usage(_)) {
                eprintln!("\n{USAGE}");
            }
            ExitCode::from(e.exit_code())
        }
    }
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Harness(HarnessError),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Harness(e) => write!(f, "{e}"),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            // Config problems exit 2; runtime failures inside a valid run
            // also count as config-level errors for the caller.
            CliError::Harness(_) => 2,
        }
    }
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        CliError::Harness(e)
    }
}

fn dispatch(args: &[String]) -> Result<bool, CliError> {
    let cmd = args.first().ok_or_else(|| CliError::Usage("missing subcommand".into()))?;
    let rest = &args[1..];
    match cmd.as_str() {
        "run" => {
            let config = load_config(&flag(rest, "--config")?)?;
            let out_dir = PathBuf::from(flag(rest, "--out")?);
            let out = harness::run_to_dir(&config, &out_dir)?;
            print!("{}", out.report.render());
            println!("trace: {}", out_dir.join("trace.csv").display());
            println!("sidecar: {}", out_dir.join("run.json").display());
            Ok(out.report.passed())
        }
        "sweep" => {
            let config = load_config(&flag(rest, "--config")?)?;
            let axis = flag(rest, "--axis")?;
            let values = parse_values(&flag(rest, "--values")?)?;
            let out_dir = PathBuf::from(flag(rest, "--out")?);
            let table = harness::sweep_to_dir(&config, &axis, &values, &out_dir)?;
            print!("{}", table.to_csv_string());
            println!("written: {}", out_dir.join("sweep.csv").display());
            Ok(true)
        }
        "verify" => {
            let trace = PathBuf::from(flag(rest, "--trace")?);
            let report = harness::verify_trace(&trace)?;
            print!("{}", report.render());
            Ok(report.passed())
        }
        other => Err(CliError::Usage(format!("unknown subcommand {other:?}"))),
    }
}

fn flag(args: &[String], name: &str) -> Result<String, CliError> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        if a == name {
            return it
                .next()
                .cloned()
                .ok_or_else(|| CliError::Usage(format!("{name} needs a value")));
        }
    }
    Err(CliError::Usage(format!("missing required flag {name}")))
}

fn load_config(path: &str) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {path}: {e}")))?;
    Ok(RunConfig::from_json(&text)?)
}

fn parse_values(s: &str) -> Result<Vec<f64>, CliError> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|e| CliError::Usage(format!("bad value {v:?} in --values: {e}")))
        })
        .collect()
}
