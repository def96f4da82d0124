use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn lab(config: &str, dir: &Path, args: &[&str]) -> Output {
    let path = dir.join("config.toml");
    fs::write(&path, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_disperse-lab"))
        .args(args)
        .arg("--config")
        .arg(&path)
        .arg("--output-dir")
        .arg(dir.join("out"))
        .output()
        .unwrap()
}

fn summary(dir: &Path, name: &str) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("out").join(format!("{name}.json"))).unwrap()).unwrap()
}

const SMALL: &str = r#"
alpha = 6.0
[grid]
num_points = 512
half_width = "10pi"
[initial_data]
kind = "gaussian"
amplitude = 0.5
width = 1.0
[stepper]
dt = 1e-2
T = 0.5
record_every = 10
"#;

#[test]
fn well_fails_hypotheses() {
    let dir = tempfile::tempdir().unwrap();
    let config = format!("{SMALL}\n[potential]\nkind = \"well\"\nV0 = 2.0\n");
    let out = lab(&config, dir.path(), &["check-potential"]);
    assert_eq!(out.status.code(), Some(2));
    let s = summary(dir.path(), "check_potential");
    assert_eq!(s["admissible"], Value::Bool(false));
    assert!(dir.path().join("out/potential.csv").exists());
    assert!(dir.path().join("out/check_potential.record.json").exists());
}

#[test]
fn zero_potential_is_resonant() {
    let dir = tempfile::tempdir().unwrap();
    let out = lab(SMALL, dir.path(), &["resonance"]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(summary(dir.path(), "resonance")["resonant"], Value::Bool(true));
}

#[test]
fn barrier_is_not_resonant() {
    let dir = tempfile::tempdir().unwrap();
    let config = format!("{SMALL}\n[potential]\nkind = \"sech2\"\n");
    let out = lab(&config, dir.path(), &["resonance"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn malformed_config_names_line_and_key() {
    let dir = tempfile::tempdir().unwrap();
    let config = "[grid]\nnum_points = 512\nhalf_width = 10.0\n\n[stepper]\ndt = \"fast\"\n";
    let out = lab(config, dir.path(), &["evolve"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains(":6:"), "{err}");
    assert!(err.contains("dt"), "{err}");
}

#[test]
fn unknown_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let config = format!("{SMALL}\n[potential]\nkind = \"sech2\"\nwidth = 3.0\n");
    let out = lab(&config, dir.path(), &["evolve"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("width"));
}

#[test]
fn run_past_horizon_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let config = SMALL.replace("T = 0.5", "T = 500.0");
    let out = lab(&config, dir.path(), &["evolve"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("T_wrap"));
}

#[test]
fn zero_length_run_has_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let config = SMALL.replace("T = 0.5", "T = 0.0");
    let out = lab(&config, dir.path(), &["evolve"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let trace = fs::read_to_string(dir.path().join("out/trace.csv")).unwrap();
    assert_eq!(trace.lines().count(), 2);
    assert!(trace.starts_with("t,mass,energy,energy_literal,sup_norm,h1\n"));
}

#[test]
fn evolve_conserves_mass() {
    let dir = tempfile::tempdir().unwrap();
    let config = format!("{SMALL}\n[potential]\nkind = \"sech2\"\n");
    let out = lab(&config, dir.path(), &["evolve"]);
    assert_eq!(out.status.code(), Some(0));
    let s = summary(dir.path(), "evolve");
    assert!(s["mass_drift"].as_f64().unwrap() < 1e-10);
    assert_eq!(s["trusted"], Value::Bool(true));
    assert_eq!(s["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn virial_of_zero_field_vanishes() {
    let dir = tempfile::tempdir().unwrap();
    let config = format!("{}\n[potential]\nkind = \"sech2\"\n", SMALL.replace("amplitude = 0.5", "amplitude = 0.0"));
    let out = lab(&config, dir.path(), &["virial"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("out/virial_r0.csv")).unwrap();
    for line in csv.lines().skip(1) {
        for cell in line.split(',').skip(1) {
            let v: f64 = cell.parse().unwrap();
            assert!(v.is_nan() || v == 0.0, "{line}");
        }
    }
}

#[test]
fn empty_sweep_writes_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let config = format!(
        "{SMALL}\n[sweep]\nalpha = []\nkind = [\"sech2\"]\nV0 = [1.0]\namplitude = [0.1]\n"
    );
    let out = lab(&config, dir.path(), &["sweep"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("out/sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1);
    assert!(csv.starts_with("alpha,kind,V0,amplitude,status"));
}

#[test]
fn sweep_marks_inadmissible_points_failed() {
    let dir = tempfile::tempdir().unwrap();
    let config = format!("{SMALL}\n[sweep]\nalpha = [6.0]\nkind = [\"well\"]\nV0 = [1.0]\namplitude = [0.1]\n");
    let out = lab(&config, dir.path(), &["sweep"]);
    assert_eq!(out.status.code(), Some(0));
    let csv = fs::read_to_string(dir.path().join("out/sweep.csv")).unwrap();
    let row = csv.lines().nth(1).unwrap();
    assert!(row.contains(",failed,"), "{row}");
}

#[test]
fn usage_errors_exit_one() {
    let out = Command::new(env!("CARGO_BIN_EXE_disperse-lab")).arg("frobnicate").output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let out = Command::new(env!("CARGO_BIN_EXE_disperse-lab")).arg("--help").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let out = Command::new(env!("CARGO_BIN_EXE_disperse-lab")).arg("evolve").output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn seed_changes_hash_not_output_dir() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let config = format!("{SMALL}\n[potential]\nkind = \"sech2\"\n");
    lab(&config, a.path(), &["check-potential"]);
    lab(&config, b.path(), &["check-potential"]);
    assert_eq!(summary(a.path(), "check_potential")["config_hash"], summary(b.path(), "check_potential")["config_hash"]);
    lab(&config, b.path(), &["check-potential", "--seed", "9"]);
    assert_ne!(summary(a.path(), "check_potential")["config_hash"], summary(b.path(), "check_potential")["config_hash"]);
}
