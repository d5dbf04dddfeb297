use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn spotcov(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spotcov"))
        .current_dir(dir)
        .env_remove("SPOTCOV_WORKERS")
        .args(args)
        .output()
        .expect("binary runs")
}

const SMOKE: &str = r#"
[[scenarios]]
name = "smoke-a"
d = 2
n_paths = 2
[scenarios.model]
kind = "heston"

[[scenarios]]
name = "smoke-b"
d = 2
n_paths = 2
[scenarios.model]
kind = "sv1f"
"#;

#[test]
fn simulate_then_estimate_writes_full_matrices() {
    let dir = tempfile::tempdir().unwrap();
    let out = spotcov(dir.path(), &["simulate", "--seed", "4", "--out", "ticks.csv"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = spotcov(dir.path(), &["estimate", "ticks.csv", "--noise", "no", "--out", "est.csv"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(dir.path().join("est.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("time_s,j,jp,value,min_eig_at_t"));
    // 18 eval times of 2 x 2 entries, PSD everywhere
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 18 * 4);
    assert!(rows.iter().all(|r| r[4] >= 0.0));
    assert_eq!(rows[0][0], 1200.0);
    assert_eq!(rows[1][3], rows[2][3]);
}

#[test]
fn explicit_frequencies_and_classical_estimator() {
    let dir = tempfile::tempdir().unwrap();
    assert!(spotcov(dir.path(), &["simulate", "--out", "ticks.csv"]).status.success());
    let out = spotcov(
        dir.path(),
        &["estimate", "ticks.csv", "--N", "30", "--M", "4", "--estimator", "classical", "--eval-grid-minutes", "60"],
    );
    assert!(out.status.success());
    assert_eq!(String::from_utf8_lossy(&out.stdout).lines().count(), 1 + 5 * 4);
    assert!(String::from_utf8_lossy(&out.stderr).contains("N = 30, M = 4.000000"));
}

#[test]
fn malformed_tick_file_exits_one_with_row() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.csv"), "asset,time_s,log_price\n0,0,1\n0,x,2\n").unwrap();
    let out = spotcov(dir.path(), &["estimate", "bad.csv"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad.csv: row 3"));
}

#[test]
fn missing_input_and_bad_flags_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(spotcov(dir.path(), &["estimate", "nope.csv"]).status.code(), Some(1));
    assert_eq!(spotcov(dir.path(), &["estimate", "x.csv", "--noise", "maybe"]).status.code(), Some(1));
    assert_eq!(spotcov(dir.path(), &["report", "--store", "none"]).status.code(), Some(1));
}

#[test]
fn bad_worker_variable_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("run.toml"), SMOKE).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_spotcov"))
        .current_dir(dir.path())
        .env("SPOTCOV_WORKERS", "lots")
        .args(["run", "--config", "run.toml", "--store", "st"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn run_is_idempotent_and_report_regenerates_table() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("run.toml"), SMOKE).unwrap();
    let first = spotcov(dir.path(), &["run", "--config", "run.toml", "--store", "st"]);
    assert!(first.status.success(), "{}", String::from_utf8_lossy(&first.stderr));
    assert_eq!(String::from_utf8_lossy(&first.stdout).trim(), "computed 2, skipped 0");
    assert_eq!(fs::read_dir(dir.path().join("st/records")).unwrap().count(), 2);
    let again = spotcov(dir.path(), &["run", "--config", "run.toml", "--store", "st"]);
    assert_eq!(String::from_utf8_lossy(&again.stdout).trim(), "computed 0, skipped 2");
    let forced = spotcov(dir.path(), &["run", "--config", "run.toml", "--store", "st", "--force"]);
    assert_eq!(String::from_utf8_lossy(&forced.stdout).trim(), "computed 2, skipped 0");

    let report = spotcov(dir.path(), &["report", "--store", "st"]);
    assert!(report.status.success());
    let table = String::from_utf8_lossy(&report.stdout).into_owned();
    assert!(table.starts_with("scenario,estimator,d,n_paths,mise"));
    assert!(table.contains("smoke-a,pdf,2,2,"));
    assert!(table.contains("smoke-b,pdf,2,2,"));
    assert!(dir.path().join("st/index.csv").exists());

    // tables are views of the store: compare recomputes the same numbers
    let compare = spotcov(dir.path(), &["compare", "--config", "run.toml"]);
    assert!(compare.status.success());
    let sorted = |t: &str| {
        let mut l: Vec<String> = t.lines().map(String::from).collect();
        l.sort();
        l
    };
    assert_eq!(sorted(&String::from_utf8_lossy(&compare.stdout)), sorted(&table));
}

#[test]
fn empty_run_config_is_a_no_op() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("run.toml"), "scenarios = []\n").unwrap();
    let out = spotcov(dir.path(), &["run", "--config", "run.toml", "--store", "st"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "computed 0, skipped 0");
}

#[test]
fn sensitivity_smoke_run_writes_one_csv_per_correlation() {
    let dir = tempfile::tempdir().unwrap();
    let out = spotcov(
        dir.path(),
        &["sensitivity", "--rhos", "0.5,-0.5", "--n", "40", "--paths", "3", "--out-dir", "sens"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for rho in ["0.5", "-0.5"] {
        let text = fs::read_to_string(dir.path().join(format!("sens/sensitivity_rho{rho}.csv"))).unwrap();
        assert!(text.starts_with("N,rel_bias_sync,rel_bias_async,rel_mse_sync,rel_mse_async"));
        assert_eq!(text.lines().count(), 22);
    }
    let bad = spotcov(dir.path(), &["sensitivity", "--rhos", "2", "--n", "40", "--paths", "1", "--out-dir", "s2"]);
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn external_estimates_join_the_comparison() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "[[scenarios]]\nname = \"one\"\nd = 2\nn_paths = 1\nmaster_seed = 9\n[scenarios.model]\nkind = \"heston\"\n";
    fs::write(dir.path().join("run.toml"), cfg).unwrap();
    fs::write(dir.path().join("scenario.toml"), cfg.replace("[[scenarios]]\n", "").replace("[scenarios.model]", "[model]")).unwrap();
    let sim = spotcov(dir.path(), &["simulate", "--scenario", "scenario.toml", "--out", "ticks.csv"]);
    assert!(sim.status.success(), "{}", String::from_utf8_lossy(&sim.stderr));
    let stderr = String::from_utf8_lossy(&sim.stderr).into_owned();
    let hash = stderr.split("hash ").nth(1).unwrap().split_whitespace().next().unwrap().to_string();
    assert!(spotcov(dir.path(), &["estimate", "ticks.csv", "--noise", "no", "--out", "ext.csv"]).status.success());
    let out = spotcov(
        dir.path(),
        &["compare", "--config", "run.toml", "--external", "ext.csv", "--external-label", "mine", "--external-scenario", &hash],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let table = String::from_utf8_lossy(&out.stdout).into_owned();
    let rows: Vec<&str> = table.lines().skip(1).collect();
    assert_eq!(rows.len(), 2);
    // the CLI estimate of path 0 with the rule frequencies is the harness PDF estimate
    let mise = |r: &str| r.split(',').nth(4).unwrap().parse::<f64>().unwrap();
    assert!(rows[1].starts_with("one,mine,2,1,"));
    assert!((mise(rows[0]) - mise(rows[1])).abs() <= 1e-9 * mise(rows[0]));
}
