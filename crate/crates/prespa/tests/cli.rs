use std::path::Path;
use std::process::{Command, Output};

fn sim(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_prespa-sim"))
        .args(args)
        .current_dir(dir)
        .env_remove("PRESPA_SIM_THREADS")
        .output()
        .expect("binary runs")
}

fn meta(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("meta.json")).unwrap()).unwrap()
}

#[test]
fn budget_totals_and_metadata() {
    let tmp = tempfile::tempdir().unwrap();
    let out = sim(&["budget", "--out", "b"], tmp.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let m = meta(&tmp.path().join("b"));
    assert_eq!(m["command"], "budget");
    assert_eq!(m["config_version"], 1);
    assert_eq!(m["config_hash"].as_str().unwrap().len(), 64);
    let l = m["summary"]["longitudinal_per_ms"].as_f64().unwrap();
    let t = m["summary"]["transverse_per_ms"].as_f64().unwrap();
    assert!((l - 2.860).abs() < 5e-4, "{l}");
    assert!((t - 3.815).abs() < 5e-4, "{t}");
    let csv = std::fs::read_to_string(tmp.path().join("b/data.csv")).unwrap();
    assert!(csv.starts_with("mechanism,occurrence_per_ms,longitudinal_per_ms,transverse_per_ms\n"));
    assert!(csv.lines().last().unwrap().starts_with("total,"));
}

#[test]
fn default_output_directory_is_under_runs() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(sim(&["budget"], tmp.path()).status.code(), Some(0));
    assert!(tmp.path().join("runs/budget/data.csv").is_file());
    assert!(tmp.path().join("runs/budget/meta.json").is_file());
}

#[test]
fn validate_passes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = sim(&["validate", "--out", "v"], tmp.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn usage_errors_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(sim(&["budget", "--no-such-flag"], tmp.path()).status.code(), Some(2));
    assert_eq!(sim(&["no-such-command"], tmp.path()).status.code(), Some(2));
    assert_eq!(sim(&["lifetime", "--mode", "sideways"], tmp.path()).status.code(), Some(2));
    assert_eq!(sim(&["lifetime", "--tmax", "3 parsecs"], tmp.path()).status.code(), Some(2));
    assert_eq!(sim(&[], tmp.path()).status.code(), Some(2));
    assert_eq!(sim(&["--help"], tmp.path()).status.code(), Some(0));
}

#[test]
fn bad_configs_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    let cases = [
        ("unknown.json", r#"{"budget": {"inptu": null}}"#),
        ("version.json", r#"{"version": 7}"#),
        ("syntax.json", "{"),
        ("device.json", r#"{"device": {"t1a": -1.0}}"#),
        ("small.json", r#"{"comb": {"cavity_dim": 4}}"#),
    ];
    for (name, text) in cases {
        std::fs::write(tmp.path().join(name), text).unwrap();
        let out = sim(&["budget", "--config", name], tmp.path());
        assert_eq!(out.status.code(), Some(2), "{name}: {}", String::from_utf8_lossy(&out.stderr));
    }
    assert_eq!(sim(&["budget", "--config", "missing.json"], tmp.path()).status.code(), Some(2));
}

#[test]
fn config_file_is_merged_and_recorded() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("c.json"), r#"{"seed": 41, "trajectory": {"ntraj": 50}}"#).unwrap();
    let out = sim(&["trajectory", "--config", "c.json", "--out", "t"], tmp.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let m = meta(&tmp.path().join("t"));
    assert_eq!(m["seed"], 41);
    assert_eq!(m["config"]["trajectory"]["ntraj"], 50);
    assert_eq!(m["config"]["trajectory"]["kappa_t"], 0.5);
}

#[test]
fn numerical_failure_exits_three() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(
        tmp.path().join("g.json"),
        r#"{"grape": {"dims": {"cavity": 10, "transmon": 2}, "duration": 0.02, "dt": 2.0, "adam": {"max_iterations": 1, "threshold": 1e-6}}}"#,
    )
    .unwrap();
    let out = sim(&["grape", "--config", "g.json", "--out", "g"], tmp.path());
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(tmp.path().join("g/data.csv").is_file());
}

#[test]
fn threads_do_not_change_results() {
    let tmp = tempfile::tempdir().unwrap();
    let args = |threads: &'static str, out: &'static str| ["trajectory", "--ntraj", "400", "--seed", "9", "--threads", threads, "--out", out];
    for (threads, out) in [("1", "a"), ("2", "b"), ("1", "c")] {
        assert_eq!(sim(&args(threads, out), tmp.path()).status.code(), Some(0));
    }
    let read = |d: &str| std::fs::read(tmp.path().join(d).join("data.csv")).unwrap();
    assert_eq!(read("a"), read("b"));
    assert_eq!(read("a"), read("c"));
    let hash = |d: &str| meta(&tmp.path().join(d))["config_hash"].clone();
    assert_eq!(hash("a"), hash("b"));

    assert_eq!(sim(&["trajectory", "--ntraj", "400", "--seed", "10", "--out", "d"], tmp.path()).status.code(), Some(0));
    assert_ne!(read("a"), read("d"));
}

#[test]
fn threads_environment_variable() {
    let tmp = tempfile::tempdir().unwrap();
    let run = |v: &str| {
        Command::new(env!("CARGO_BIN_EXE_prespa-sim"))
            .args(["budget", "--out", "e"])
            .current_dir(tmp.path())
            .env("PRESPA_SIM_THREADS", v)
            .output()
            .unwrap()
            .status
            .code()
    };
    assert_eq!(run("2"), Some(0));
    assert_eq!(run("many"), Some(2));
}

#[test]
fn wigner_and_ramsey_summaries() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(sim(&["wigner", "--out", "w"], tmp.path()).status.code(), Some(0));
    let w = meta(&tmp.path().join("w"));
    assert!(w["summary"]["reconstruction_fidelity"].as_f64().unwrap() > 0.999);
    assert_eq!(sim(&["ramsey", "--out", "r"], tmp.path()).status.code(), Some(0));
    let f = meta(&tmp.path().join("r"))["summary"]["fit"]["frequency_khz"].as_f64().unwrap();
    assert!((f - 17.0).abs() < 0.05, "{f}");
}
