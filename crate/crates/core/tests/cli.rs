use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use epimacro::io::read_trajectory;
use epimacro::ModelParams;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_epimacro"));
    c.env_remove("EPIMACRO_DATA_DIR");
    c
}

fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn short_scenario(dir: &Path) -> PathBuf {
    let path = dir.join("short.json");
    std::fs::write(
        &path,
        r#"{
  "name": "short-lockdown",
  "start_date": "2020-01-22",
  "n0": 7.718e9, "i0": 510, "r0": 28, "d0": 17,
  "a0": 1.906, "k0": 2.827e14,
  "schedule": { "start": "2020-05-21", "intensity": 0.1, "duration_days": 182 },
  "end_of_interest": "2021-12-31",
  "horizon": "2040-12-31"
}"#,
    )
    .unwrap();
    path
}

#[test]
fn calibrate_writes_parameters_and_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("cal/params.json");
    let o = bin()
        .env("EPIMACRO_DATA_DIR", data_dir())
        .args(["calibrate", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("Mortality rate") && text.contains("R^2"));
    let p: ModelParams = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert!((p.k2 - 0.701).abs() < 0.01);
    assert!(tmp.path().join("cal/calibration_report.txt").is_file());
}

#[test]
fn simulate_custom_scenario_file() {
    let tmp = tempfile::tempdir().unwrap();
    let scenario = short_scenario(tmp.path());
    let out = tmp.path().join("run");
    let o = bin()
        .args(["simulate", "--scenario"])
        .arg(&scenario)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = read_trajectory(&out.join("trajectory.csv")).unwrap();
    assert_eq!(rows.first().unwrap().date.to_string(), "2020-01-22");
    assert_eq!(rows.last().unwrap().date.to_string(), "2021-12-31");
    for f in ["metrics.json", "manifest.json", "I.svg", "C.csv"] {
        assert!(out.join(f).is_file(), "{f}");
    }
    let manifest = std::fs::read_to_string(out.join("manifest.json")).unwrap();
    assert!(manifest.contains("params_fingerprint"));
}

#[test]
fn unknown_scenario_lists_known_names() {
    let tmp = tempfile::tempdir().unwrap();
    let o = bin()
        .args(["simulate", "--scenario", "lockdown-forever", "--out"])
        .arg(tmp.path())
        .output()
        .unwrap();
    assert!(!o.status.success());
    let e = stderr(&o);
    assert!(
        e.contains("no-pandemic") && e.contains("no-intervention"),
        "{e}"
    );
}

#[test]
fn empty_sweep_values_are_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let o = bin()
        .args(["sweep", "--axis", "duration", "--values", " , ", "--out"])
        .arg(tmp.path())
        .output()
        .unwrap();
    assert!(!o.status.success());
    assert!(stderr(&o).contains("--values"));
}

#[test]
fn misspelled_config_key_is_named() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.json");
    std::fs::write(&cfg, r#"{ "sweeps": { "intensitys": [0.1] } }"#).unwrap();
    let o = bin()
        .arg("--config")
        .arg(&cfg)
        .args(["simulate", "--scenario", "no-pandemic", "--out"])
        .arg(tmp.path())
        .output()
        .unwrap();
    assert!(!o.status.success());
    assert!(stderr(&o).contains("sweeps.intensitys"), "{}", stderr(&o));
}

#[test]
fn config_overrides_parameters() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.json");
    std::fs::write(
        &cfg,
        r#"{ "params": { "b0": 0.0 }, "scenarios": [ { "name": "quiet", "start_date": "2020-01-22",
            "n0": 7.718e9, "i0": 510, "r0": 28, "d0": 17, "a0": 1.906, "k0": 2.827e14,
            "end_of_interest": "2020-12-31", "horizon": "2035-12-31" } ] }"#,
    )
    .unwrap();
    let out = tmp.path().join("quiet");
    let o = bin()
        .arg("--config")
        .arg(&cfg)
        .args(["simulate", "--scenario", "quiet", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = read_trajectory(&out.join("trajectory.csv")).unwrap();
    assert!(rows.iter().all(|r| r.d == 17.0));
}

#[test]
fn report_replots_saved_trajectories() {
    let tmp = tempfile::tempdir().unwrap();
    let scenario = short_scenario(tmp.path());
    let run = tmp.path().join("run");
    assert!(bin()
        .args(["simulate", "--scenario"])
        .arg(&scenario)
        .arg("--out")
        .arg(&run)
        .status()
        .unwrap()
        .success());
    let out = tmp.path().join("plots");
    let o = bin()
        .args(["report", "--variables", "K,H", "--inputs"])
        .arg(run.join("trajectory.csv"))
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let svg = std::fs::read_to_string(out.join("K.svg")).unwrap();
    assert!(svg.starts_with("<svg") || svg.starts_with("<?xml"));
    assert!(svg.contains("run"));

    let o = bin()
        .args(["report", "--variables", "GDP", "--inputs"])
        .arg(run.join("trajectory.csv"))
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(!o.status.success());
    assert!(stderr(&o).contains("valid"));
}

#[test]
fn backtest_writes_report() {
    let tmp = tempfile::tempdir().unwrap();
    let o = bin()
        .args(["backtest", "--observed"])
        .arg(data_dir())
        .arg("--out")
        .arg(tmp.path())
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("GDP within 10% every year: yes"));
    let csv = std::fs::read_to_string(tmp.path().join("backtest.csv")).unwrap();
    assert_eq!(csv.lines().filter(|l| l.starts_with("gdp,")).count(), 21);
}
