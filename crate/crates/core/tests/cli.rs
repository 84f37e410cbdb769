use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn run(dir: &Path, config: &str, args: &[&str]) -> Output {
    let cfg = dir.join("run.toml");
    std::fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_rotorbit"))
        .args(args)
        .arg("--config")
        .arg(&cfg)
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).unwrap()
}

/// Data rows of a CSV artifact, comments and header dropped.
fn rows(o: &Output) -> Vec<Vec<String>> {
    let text = String::from_utf8(o.stdout.clone()).unwrap();
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(String::from).collect())
        .collect()
}

const HERMAN: &str = "tau = 0.3\nalpha = 0.8\nbeta = 0.5\nn = 20000\nensemble = 10\nseed = 7\n";

#[test]
fn rigid_rotation_is_exact() {
    let dir = TempDir::new().unwrap();
    let o = run(dir.path(), "tau = 0.25\nn = 1000\nensemble = 4\nseed = 1\n", &["rotnum"]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert!((v["estimate"]["value"].as_f64().unwrap() - 0.25).abs() < 1e-12);
    assert_eq!(v["spread_ok"], true);
}

#[test]
fn output_is_byte_identical_across_runs() {
    let dir = TempDir::new().unwrap();
    let a = run(dir.path(), HERMAN, &["rotnum"]);
    let b = run(dir.path(), HERMAN, &["rotnum"]);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);

    let out = dir.path().join("r.json");
    let c = run(dir.path(), HERMAN, &["rotnum", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&c), 0);
    assert!(c.stdout.is_empty());
    assert_eq!(std::fs::read(&out).unwrap(), a.stdout);
}

#[test]
fn usage_errors_exit_4() {
    let dir = TempDir::new().unwrap();
    let bad_alpha = run(dir.path(), "alpha = \"big\"\nseed = 1\n", &["rotnum"]);
    assert_eq!(code(&bad_alpha), 4);
    assert!(String::from_utf8_lossy(&bad_alpha.stderr).contains("alpha"));

    let unknown = run(dir.path(), "alpah = 1.0\nseed = 1\n", &["rotnum"]);
    assert_eq!(code(&unknown), 4);
    assert!(String::from_utf8_lossy(&unknown.stderr).contains("alpah"));

    let no_seed = run(dir.path(), "tau = 0.3\n", &["rotnum"]);
    assert_eq!(code(&no_seed), 4);
    assert!(String::from_utf8_lossy(&no_seed.stderr).contains("seed"));

    assert_eq!(code(&run(dir.path(), HERMAN, &["spin"])), 4);
    assert_eq!(code(&run(dir.path(), "omega = 0.5\nseed = 1\n", &["rotnum"])), 4);
    assert_eq!(code(&run(dir.path(), "seed = 1\n", &["tsearch"])), 4);

    let missing = Command::new(env!("CARGO_BIN_EXE_rotorbit"))
        .args(["rotnum", "--config", "/nonexistent/run.toml"])
        .output()
        .unwrap();
    assert_eq!(code(&missing), 4);
}

#[test]
fn property_violation_exits_2() {
    let dir = TempDir::new().unwrap();
    let cfg = format!("{HERMAN}spread_tol = 1e-15\n");
    let o = run(dir.path(), &cfg, &["rotnum"]);
    assert_eq!(code(&o), 2);
    // the artifact is still written
    assert_eq!(json(&o)["spread_ok"], false);
}

#[test]
fn seed_flag_overrides_config() {
    let dir = TempDir::new().unwrap();
    let unseeded = HERMAN.replace("seed = 7\n", "");
    let flag = run(dir.path(), &unseeded, &["rotnum", "--seed", "7"]);
    let file = run(dir.path(), HERMAN, &["rotnum"]);
    assert_eq!(code(&flag), 0);
    assert_eq!(flag.stdout, file.stdout);
    let other = run(dir.path(), HERMAN, &["rotnum", "--seed", "8"]);
    assert_ne!(json(&other)["estimate"]["value"], serde_json::Value::Null);
    assert_ne!(other.stdout, file.stdout);
}

#[test]
fn single_cell_sweep_matches_single_run() {
    let dir = TempDir::new().unwrap();
    let single = json(&run(dir.path(), HERMAN, &["rotnum"]));
    let cfg = format!("{HERMAN}sweep_command = \"rotnum\"\nsweep_alpha = [0.8, 0.8, 1]\n");
    let o = run(dir.path(), &cfg, &["sweep"]);
    assert_eq!(code(&o), 0);
    let r = rows(&o);
    assert_eq!(r.len(), 1);
    assert_eq!(r[0][3], "ok");
    let value: f64 = r[0][5].parse().unwrap();
    let want = single["estimate"]["value"].as_f64().unwrap();
    assert!((value - want).abs() <= 1e-11 * want.abs().max(1.0));
}

#[test]
fn monotone_alpha_sweep_collapses_intervals() {
    let dir = TempDir::new().unwrap();
    let base = "tau = 0.3\nbeta = 0.5\nn = 10000\nensemble = 8\nseed = 3\nm = 4096\n";
    let cfg = format!("{base}sweep_command = \"rotint\"\nsweep_alpha = [0.5, 1.0, 3]\n");
    let o = run(dir.path(), &cfg, &["sweep"]);
    assert_eq!(code(&o), 0);
    let r = rows(&o);
    assert_eq!(r.len(), 3);
    for (i, row) in r.iter().enumerate() {
        assert_eq!(row[3], "ok", "{row:?}");
        let alpha: f64 = row[1].parse().unwrap();
        assert!((alpha - (0.5 + 0.25 * i as f64)).abs() < 1e-12);
        let (length, spread): (f64, f64) = (row[7].parse().unwrap(), row[8].parse().unwrap());
        assert!(length <= 2.0 * spread + 1e-3, "{row:?}");
        // the same cell run on its own
        let single = json(&run(dir.path(), &format!("{base}alpha = {alpha}\n"), &["rotint"]));
        let lo: f64 = row[5].parse().unwrap();
        assert!((lo - single["lo"].as_f64().unwrap()).abs() <= 1e-11);
    }
    let again = run(dir.path(), &cfg, &["sweep"]);
    assert_eq!(o.stdout, again.stdout);
}

#[test]
fn strong_forcing_interval_has_unit_length() {
    let dir = TempDir::new().unwrap();
    let cfg = "tau = 0.1\nalpha = 7.853981633974483\nbeta = 0.7\nn = 20000\nensemble = 10\nseed = 0\n";
    let o = run(dir.path(), cfg, &["rotint"]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert!(v["length"].as_f64().unwrap() >= 1.0 - 1e-3);
    assert_eq!(v["checks_ok"], true);
}
