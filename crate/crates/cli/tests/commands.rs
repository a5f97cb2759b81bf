use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_platoon-sim"))
}

fn smoke_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/smoke.toml")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn data_lines(path: &Path) -> Vec<String> {
    fs::read_to_string(path).unwrap().lines().skip(1).map(str::to_owned).collect()
}

#[test]
fn simulate_acc_smoke_run_produces_records() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let cfg = smoke_config();
    let o = run(&["simulate", "--config", cfg.to_str().unwrap(), "--out", out, "--approach", "acc", "--density", "5"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = data_lines(&dir.path().join("records.csv"));
    assert!(!rows.is_empty());
    assert!(rows.iter().all(|r| r.contains(",acc,")));
    assert!(!dir.path().join("audit.csv").exists());
}

#[test]
fn simulate_trip_cost_with_audit_writes_decisions() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let cfg = smoke_config();
    let o = run(&["simulate", "--config", cfg.to_str().unwrap(), "--out", out, "--approach", "trip-cost", "--audit"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(dir.path().join("audit.csv")).unwrap();
    assert!(text.starts_with("t,vehicle,individual_cost,best_platoon_cost,target,decision\n"));
    assert!(text.lines().count() > 1);
}

#[test]
fn trace_lists_every_vehicle_each_step() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let cfg = smoke_config();
    let o = run(&["simulate", "--config", cfg.to_str().unwrap(), "--out", out, "--trace", "--duration", "30"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert!(text.starts_with("t,id,pos,lane,speed,mode,platoon_id\n"));
    let last_t: f64 = text.lines().last().unwrap().split(',').next().unwrap().parse().unwrap();
    assert_eq!(last_t, 30.0);
}

#[test]
fn invalid_approach_is_a_usage_error() {
    let o = run(&["simulate", "--approach", "teleport"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("teleport"));
}

#[test]
fn unknown_config_key_fails_at_runtime() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "[scenario]\nroad_length = 5\n").unwrap();
    let o = run(&["analyze", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn analyze_default_grid_is_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let o = run(&["analyze", "--out", d.path().to_str().unwrap()]);
        assert!(o.status.success());
    }
    let first = fs::read(a.path().join("analysis.csv")).unwrap();
    assert_eq!(first, fs::read(b.path().join("analysis.csv")).unwrap());
    assert_eq!(data_lines(&a.path().join("analysis.csv")).len(), 16 * 11 * 6 * 2);
}

#[test]
fn analyze_into_unwritable_location_fails() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "").unwrap();
    let o = run(&["analyze", "--out", blocker.join("sub").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn small_sweep_runs_four_cells_and_one_gain_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let cfg = smoke_config();
    let o = run(&[
        "sweep", "--config", cfg.to_str().unwrap(), "--out", out, "--approach", "acc", "--approach", "trip-cost",
        "--density", "5", "--seed", "0", "--seed", "1",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let manifest = fs::read_to_string(dir.path().join("manifest.toml")).unwrap();
    assert_eq!(manifest.matches("[[runs]]").count(), 4);
    let records = data_lines(&dir.path().join("records.csv"));
    for (a, s) in [("acc", "0"), ("acc", "1"), ("trip-cost", "0"), ("trip-cost", "1")] {
        let tag = format!(",{a},5.0,{s},");
        assert!(records.iter().any(|r| r.contains(&tag)), "no records for {tag}");
    }
    let gains = data_lines(&dir.path().join("gains.csv"));
    assert!(gains.iter().any(|r| r.contains(",trip-cost,")));
    assert!(dir.path().join("stats.csv").exists());
}

#[test]
fn report_on_baseline_only_records_gives_zero_gains() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let cfg = smoke_config();
    assert!(run(&["simulate", "--config", cfg.to_str().unwrap(), "--out", out, "--approach", "acc"]).status.success());
    let records = dir.path().join("records.csv");
    let report_dir = dir.path().join("report");
    let o = run(&["report", "--records", records.to_str().unwrap(), "--out", report_dir.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let gains = data_lines(&report_dir.join("gains.csv"));
    assert!(!gains.is_empty());
    for row in gains {
        let gain: f64 = row.rsplit(',').next().unwrap().parse().unwrap();
        assert_eq!(gain, 0.0, "{row}");
    }
}

#[test]
fn report_without_baseline_is_an_explicit_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let cfg = smoke_config();
    assert!(run(&["simulate", "--config", cfg.to_str().unwrap(), "--out", out, "--approach", "human"]).status.success());
    let records = dir.path().join("records.csv");
    let o = run(&["report", "--records", records.to_str().unwrap(), "--out", out]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("missing baseline"));
}
