use std::path::Path;
use std::process::{Command, Output};

fn gelfand(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gelfand")).args(args).output().expect("binary runs")
}

fn out_arg(dir: &Path) -> String {
    dir.to_str().unwrap().to_string()
}

#[test]
fn out_of_range_lambda_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = gelfand(&["predict", "--lambda", "1.5", "--out", &out_arg(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("outside (0, 1)"));
}

#[test]
fn empty_lambda_list_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    std::fs::write(&cfg, "lambda_list = []\n").unwrap();
    let o = gelfand(&["verify", "--config", cfg.to_str().unwrap(), "--out", &out_arg(&dir.path().join("o"))]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn malformed_config_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    std::fs::write(&cfg, "m = \"three\"\n").unwrap();
    let o = gelfand(&["predict", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let o = gelfand(&["predict", "--domain", "square"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn selftest_reports_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [a.path(), b.path()] {
        let o = gelfand(&["selftest", "--out", &out_arg(d), "--jobs", "1"]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    }
    let read = |d: &Path| std::fs::read_to_string(d.join("results.json")).unwrap();
    let strip = |s: String, d: &Path| s.replace(d.to_str().unwrap(), "OUT");
    assert_eq!(strip(read(a.path()), a.path()), strip(read(b.path()), b.path()));
    assert_eq!(
        std::fs::read(a.path().join("tables/selftest.csv")).unwrap(),
        std::fs::read(b.path().join("tables/selftest.csv")).unwrap()
    );
}

#[test]
fn corrupted_tolerance_names_the_check() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    std::fs::write(&cfg, "[tolerances]\nselftest_disk_oracle = 1e-30\n").unwrap();
    let o = gelfand(&["selftest", "--config", cfg.to_str().unwrap(), "--out", &out_arg(dir.path())]);
    assert_eq!(o.status.code(), Some(1));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.lines().any(|l| l.starts_with("FAIL disk_closed_form")), "{stdout}");
}

#[test]
fn annulus_predict_writes_the_multiplicity_table() {
    let dir = tempfile::tempdir().unwrap();
    let o = gelfand(&[
        "predict", "--domain", "annulus", "--inner-radius", "0.5", "--m", "4", "--lambda", "1e-3,1e-4", "--out",
        &out_arg(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let table = std::fs::read_to_string(dir.path().join("tables/multiplicity.csv")).unwrap();
    assert_eq!(table.lines().count(), 4);
    assert_eq!(table.lines().filter(|l| l.ends_with(",true")).count(), 1);
    let pred = std::fs::read_to_string(dir.path().join("tables/prediction.csv")).unwrap();
    assert_eq!(pred.lines().count(), 1 + 2 * 4);
}

#[test]
fn disk_verify_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let o = gelfand(&["verify", "--domain", "disk", "--out", &out_arg(dir.path())]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("0 fail"), "{stdout}");
    let table = std::fs::read_to_string(dir.path().join("tables/comparison.csv")).unwrap();
    assert_eq!(table.lines().count(), 1 + 9);
    assert!(dir.path().join("branch_disk_r1_m1.json").exists());
    assert!(dir.path().join("run.log").exists());
}
