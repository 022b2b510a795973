//! End-to-end checks of the installed binary: exit codes, run-directory
//! layout, input validation, and byte-identical reruns.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_c3pu"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary should spawn")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name))
        .unwrap_or_else(|e| panic!("{name} missing in {}: {e}", dir.display()))
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["--version"]).status.code(), Some(0));
    assert_eq!(run(&["ann", "--help"]).status.code(), Some(0));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(run(&["vtc-sweep", "--bogus"]).status.code(), Some(1));
    assert_eq!(run(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(
        run(&["ann", "infer"]).status.code(),
        Some(1),
        "--features is required"
    );
}

#[test]
fn sweep_writes_the_run_dir_contract() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("sweep");
    let out = run(&["--out", dir.to_str().unwrap(), "vtc-sweep", "--steps", "11"]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));

    let config: serde_json::Value = serde_json::from_str(&read(&dir, "config-resolved")).unwrap();
    assert_eq!(config["command"], "vtc-sweep");
    assert_eq!(config["parameters"]["steps"], 11);

    let results = read(&dir, "results.csv");
    let mut lines = results.lines();
    let header = lines.next().unwrap();
    assert!(header.contains("v_in"), "header row first: {header}");
    assert_eq!(lines.count(), 11, "one data row per sweep point");

    assert!(read(&dir, "summary").contains("gain"));
}

#[test]
fn unknown_scenario_fails_validation_with_no_partial_output() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("never");
    let out = run(&["--out", dir.to_str().unwrap(), "--scenario", "bogus", "mc"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("bogus"));
    assert!(!dir.exists(), "validation failure must not leave a run dir");
}

#[test]
fn invalid_parameters_fail_before_any_output() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("never");
    let out = run(&["--out", dir.to_str().unwrap(), "vtc-sweep", "--steps", "1"]);
    assert_eq!(out.status.code(), Some(1), "stderr: {}", stderr(&out));
    assert!(!dir.exists());
}

#[test]
fn monte_carlo_reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for dir in [&a, &b] {
        let out = run(&["--out", dir.to_str().unwrap(), "--samples", "60", "mc"]);
        assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    }
    for name in ["results.csv", "summary", "histogram.csv"] {
        assert_eq!(
            read(&a, name),
            read(&b, name),
            "{name} differs between reruns"
        );
    }
}

#[test]
fn crossbar_accepts_the_shipped_demo_drives() {
    let demo = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/demo_inputs.csv");
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for dir in [&a, &b] {
        let out = run(&[
            "--out",
            dir.to_str().unwrap(),
            "--scenario",
            "paper-noise",
            "crossbar",
            "--inputs",
            demo.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    }
    let results = read(&a, "results.csv");
    assert!(results.lines().next().unwrap().contains("set"));
    assert_eq!(
        results.lines().count(),
        6,
        "header plus one row per drive set"
    );
    assert_eq!(
        results,
        read(&b, "results.csv"),
        "noisy rerun must replay exactly"
    );
}

#[test]
fn malformed_drive_csv_reports_the_line_number() {
    let tmp = tempfile::tempdir().unwrap();
    let csv = tmp.path().join("drives.csv");
    std::fs::write(
        &csv,
        "v1,v2,v3,v4,v5\n0.1,0.2,0.3,0.4,0.5\n0.1,oops,0.3,0.4,0.5\n",
    )
    .unwrap();
    let out = run(&[
        "--out",
        tmp.path().join("run").to_str().unwrap(),
        "crossbar",
        "--inputs",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr(&out);
    assert!(
        err.contains("line 3"),
        "stderr should name the bad line: {err}"
    );
}

#[test]
fn corrupt_weights_file_is_a_runtime_error() {
    let tmp = tempfile::tempdir().unwrap();
    let weights = tmp.path().join("weights.json");
    std::fs::write(&weights, "{ not json").unwrap();
    let config = tmp.path().join("config.json");
    std::fs::write(
        &config,
        format!(r#"{{"ann": {{"weights": "{}"}}}}"#, weights.display()),
    )
    .unwrap();
    let out = run(&[
        "--config",
        config.to_str().unwrap(),
        "--out",
        tmp.path().join("run").to_str().unwrap(),
        "ann",
        "infer",
        "--features",
        "5.1,3.5,1.4,0.2",
    ]);
    assert_eq!(out.status.code(), Some(2), "stderr: {}", stderr(&out));
}

#[test]
fn missing_config_file_is_a_validation_error() {
    let out = run(&["--config", "/nonexistent/config.json", "vtc-sweep"]);
    assert_eq!(out.status.code(), Some(1), "stderr: {}", stderr(&out));
}

#[test]
fn seed_flag_reproduces_the_shipped_weights() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("train");
    let out = run(&[
        "--out",
        dir.to_str().unwrap(),
        "--seed",
        "21",
        "ann",
        "train",
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));

    let trained: serde_json::Value = serde_json::from_str(&read(&dir, "weights.json")).unwrap();
    assert_eq!(trained["split_seed"], 21);
    assert_eq!(trained["train"]["seed"], 21);

    let shipped =
        std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("data/pretrained.json"))
            .unwrap();
    assert_eq!(
        read(&dir, "weights.json"),
        shipped,
        "shipped weights must be reproducible"
    );
}

#[test]
fn seed_override_lands_in_the_resolved_config() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("config.json");
    std::fs::write(&config, r#"{"mismatch": {"seed": 7}}"#).unwrap();
    let dir = tmp.path().join("run");
    let out = run(&[
        "--config",
        config.to_str().unwrap(),
        "--seed",
        "9",
        "--out",
        dir.to_str().unwrap(),
        "vtc-sweep",
        "--steps",
        "2",
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let resolved: serde_json::Value = serde_json::from_str(&read(&dir, "config-resolved")).unwrap();
    assert_eq!(
        resolved["scenario"]["mismatch"]["seed"], 9,
        "--seed wins over the config file"
    );
}
