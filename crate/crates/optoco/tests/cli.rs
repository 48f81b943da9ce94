//! End-to-end checks of the `optoco` binary: subcommands, artifacts, and
//! exit codes (0 = all checks pass, 1 = a check failed, 2 = config error).

use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_optoco"))
}

fn temp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("optoco-cli-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

const CONFIG: &str = r#"{
  "algorithm": "coco",
  "domain": {"kind": "box", "lower": [0.0, 0.0], "upper": [1.0, 1.0]},
  "loss": "quadratic",
  "constraint": "fixed-halfspace",
  "drift_rate": 0.05,
  "predictor": {"kind": "previous-function"},
  "horizon": 300,
  "seed": 12
}"#;

#[test]
fn run_writes_artifacts_and_exits_zero() {
    let dir = temp_dir("run");
    let cfg = dir.join("config.json");
    std::fs::write(&cfg, CONFIG).unwrap();
    let out_dir = dir.join("out");
    let output = bin()
        .args(["run", "--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0), "{}", String::from_utf8_lossy(&output.stderr));
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("PASS"), "{stdout}");
    assert!(out_dir.join("trace.csv").exists());
    assert!(out_dir.join("run.json").exists());

    // Re-run into a second directory: byte-identical artifacts.
    let out2 = dir.join("out2");
    bin()
        .args(["run", "--config", cfg.to_str().unwrap(), "--out", out2.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(
        std::fs::read(out_dir.join("trace.csv")).unwrap(),
        std::fs::read(out2.join("trace.csv")).unwrap()
    );

    // verify re-checks the serialized run.
    let output = bin()
        .args(["verify", "--trace", out_dir.join("trace.csv").to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0), "{}", String::from_utf8_lossy(&output.stderr));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn config_errors_exit_two() {
    let dir = temp_dir("bad");
    let cfg = dir.join("config.json");
    // Experts on a box domain is rejected at validation.
    std::fs::write(
        &cfg,
        r#"{
  "algorithm": "experts",
  "domain": {"kind": "box", "lower": [0.0], "upper": [1.0]},
  "loss": "linear",
  "predictor": {"kind": "zero"},
  "horizon": 10,
  "seed": 1
}"#,
    )
    .unwrap();
    let out = bin()
        .args(["run", "--config", cfg.to_str().unwrap(), "--out", dir.join("o").to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stdout));

    // Missing flags and unknown subcommands are usage errors.
    assert_eq!(bin().args(["run"]).output().unwrap().status.code(), Some(2));
    assert_eq!(bin().args(["frobnicate"]).output().unwrap().status.code(), Some(2));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn tampered_trace_fails_verification() {
    let dir = temp_dir("tamper");
    let cfg = dir.join("config.json");
    std::fs::write(&cfg, CONFIG).unwrap();
    let out_dir = dir.join("out");
    bin()
        .args(["run", "--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap()])
        .output()
        .unwrap();
    // Corrupt one cumulative-error cell; the accounting identity must trip.
    let trace_path = out_dir.join("trace.csv");
    let text = std::fs::read_to_string(&trace_path).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let mid = lines.len() / 2;
    let mut fields: Vec<String> = lines[mid].split(',').map(String::from).collect();
    fields[10] = "9.9e9".into(); // err_f column
    lines[mid] = fields.join(",");
    std::fs::write(&trace_path, lines.join("\n") + "\n").unwrap();

    let out = bin().args(["verify", "--trace", trace_path.to_str().unwrap()]).output().unwrap();
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stdout));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL"));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn sweep_writes_aggregate_table() {
    let dir = temp_dir("sweep");
    let cfg = dir.join("config.json");
    std::fs::write(
        &cfg,
        r#"{
  "algorithm": "adagrad-omd",
  "domain": {"kind": "box", "lower": [0.0, 0.0], "upper": [1.0, 1.0]},
  "loss": "quadratic",
  "drift_rate": 0.05,
  "predictor": {"kind": "noisy-perfect", "noise_scale": 0.0},
  "horizon": 200,
  "seed": 3
}"#,
    )
    .unwrap();
    let out_dir = dir.join("out");
    let out = bin()
        .args([
            "sweep",
            "--config",
            cfg.to_str().unwrap(),
            "--axis",
            "noise",
            "--values",
            "0,0.5,2",
            "--out",
            out_dir.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let table = std::fs::read_to_string(out_dir.join("sweep.csv")).unwrap();
    assert_eq!(table.lines().count(), 4, "header + one row per value:\n{table}");
    assert!(out_dir.join("noise-0.5").join("trace.csv").exists());
    std::fs::remove_dir_all(&dir).ok();
}
