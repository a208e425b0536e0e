use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use macoff_simlab::table::{read_csv, write_csv, HEADER};

fn macoff(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_macoff")).args(args).output().unwrap()
}

fn bundled(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "configs", name].iter().collect();
    p.to_string_lossy().into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

const WEAK: &str = r#"
name = "weak"
[system]
noise = 0.1
power_unit = "normalized"

[user1]
bits = 1e6
latency = 2.5
exec_time = 0.5
gain = 0.05
power_budget = 0.3

[user2]
bits = 1e6
latency = 3.3
exec_time = 0.5
gain = 0.1
power_budget = 0.5
"#;

#[test]
fn solve_emits_one_csv_row_per_scheme() {
    let o = macoff(&["solve", "--config", &bundled("weak-pair.toml"), "--csv"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = read_csv(o.stdout.as_slice()).unwrap();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r.feasible && r.scenario_id == "weak-pair"));
    assert!(stdout(&o).starts_with(&HEADER.join(",")));
}

#[test]
fn infeasible_verdicts_still_exit_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "weak.toml", WEAK);
    let o = macoff(&["solve", "-c", &cfg, "-s", "TDMA", "-s", "FullMA", "--json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let rows = v.as_array().unwrap();
    assert_eq!(rows.len(), 2);
    for r in rows {
        assert_eq!(r["feasible"], false);
        assert!(r["energy_total_norm"].is_null());
    }
    let human = macoff(&["solve", "-c", &cfg]);
    assert!(stdout(&human).contains("infeasible"));
}

#[test]
fn sweep_output_revalidates() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("partial-gain.csv");
    let out = out.to_str().unwrap();
    let cfg = bundled("partial-gain.toml");
    let o = macoff(&["sweep", "-c", &cfg, "--out", out]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = read_csv(fs::File::open(out).unwrap()).unwrap();
    assert_eq!(rows.len(), 15 * 4);
    assert!(rows.iter().all(|r| r.scenario_id.starts_with("partial-gain-h1#")));
    let v = macoff(&["validate", "-c", &cfg, "-i", out]);
    assert!(v.status.success(), "{}{}", stdout(&v), stderr(&v));
    assert!(stdout(&v).contains("60 rows checked, 0 with violations"));
}

#[test]
fn validate_rejects_a_tampered_row() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = bundled("weak-pair.toml");
    let o = macoff(&["solve", "-c", &cfg, "-s", "FullMA", "--csv"]);
    let mut rows = read_csv(o.stdout.as_slice()).unwrap();
    rows[0].p11 = rows[0].p11.map(|p| p * 10.0);
    let mut buf = Vec::new();
    write_csv(&rows, &mut buf).unwrap();
    let path = write(dir.path(), "bad.csv", std::str::from_utf8(&buf).unwrap());
    let v = macoff(&["validate", "-c", &cfg, "-i", &path]);
    assert!(!v.status.success());
    assert!(stdout(&v).contains("1 with violations"), "{}", stdout(&v));
}

#[test]
fn montecarlo_is_reproducible_and_its_trials_revalidate() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = bundled("fading.toml");
    let trials = dir.path().join("trials.csv");
    let trials = trials.to_str().unwrap();
    let args = ["montecarlo", "-c", &cfg, "--trials", "8", "--seed", "3", "--json"];
    let a = macoff(&[&args[..], &["--trials-out", trials]].concat());
    assert!(a.status.success(), "{}", stderr(&a));
    let b = macoff(&args);
    assert_eq!(a.stdout, b.stdout);
    let aggs: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    // Five distances, binary and partial with two schemes each, mixed with two.
    assert_eq!(aggs.as_array().unwrap().len(), 5 * 6);
    let rows = read_csv(fs::File::open(trials).unwrap()).unwrap();
    assert_eq!(rows.len(), 5 * 8 * 6);
    assert!(rows[0].scenario_id.starts_with("mc:seed=3:d1=100:trial=0"));
    let v = macoff(&["validate", "-c", &cfg, "-i", trials]);
    assert!(v.status.success(), "{}{}", stdout(&v), stderr(&v));
}

#[test]
fn oracle_check_reports_agreement() {
    let o = macoff(&["oracle-check", "-c", &bundled("weak-pair.toml"), "-s", "TDMA", "-s", "FullMA"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 2);
    for line in text.lines() {
        let d: f64 = line.rsplit(' ').next().unwrap().parse().unwrap();
        assert!(d < 1e-3, "{line}");
    }
}

#[test]
fn config_errors_name_the_field_and_fail() {
    let dir = tempfile::tempdir().unwrap();
    let typo = write(dir.path(), "typo.toml", &WEAK.replace("gain = 0.05", "gian = 0.05"));
    let o = macoff(&["solve", "-c", &typo]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("gian"), "{}", stderr(&o));

    let neg = write(dir.path(), "neg.toml", &WEAK.replace("bits = 1e6\nlatency = 3.3", "bits = -1\nlatency = 3.3"));
    let o = macoff(&["solve", "-c", &neg]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("user2.bits"), "{}", stderr(&o));

    let o = macoff(&["sweep", "-c", &write(dir.path(), "plain.toml", WEAK)]);
    assert!(!o.status.success());
}

#[test]
fn out_of_order_latencies_warn_and_are_noted() {
    let dir = tempfile::tempdir().unwrap();
    let swapped = WEAK.replace("latency = 2.5", "latency = 9.0").replace("gain = 0.05", "gain = 0.4");
    let cfg = write(dir.path(), "swapped.toml", &swapped);
    let o = macoff(&["solve", "-c", &cfg, "-s", "FullMA", "--csv"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("out of order"));
    let rows = read_csv(o.stdout.as_slice()).unwrap();
    assert!(rows[0].case_trace.contains("users relabelled"), "{}", rows[0].case_trace);
    let path = write(dir.path(), "rows.csv", &stdout(&o));
    let v = macoff(&["validate", "-c", &cfg, "-i", &path]);
    assert!(v.status.success(), "{}{}", stdout(&v), stderr(&v));
}
