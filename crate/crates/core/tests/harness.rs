use std::collections::BTreeSet;
use std::path::Path;

use compens::harness::{
    load_experiment, read_results, run_experiment, run_experiment_with_threads, sha256_hex, trial_seed,
};
use compens::Error;

const CONFIG: &str = r#"
name = "smoke"
output_dir = "out"
master_seed = 42
trials = 2
n_test = 5000
loss = "zero_one"
family = "rademacher"
n = [64, 128]
m = [1, 3]
psi_reps = 2
k_rule = { rule = "fixed", k = 2 }
distribution = "law.toml"
"#;

const LAW: &str = "variant = \"gauss_margin\"\nd = 6\ngamma = 2.0\nrho = 2.0\nalpha = 0.5\n";

fn write_config(dir: &Path, text: &str) -> std::path::PathBuf {
    std::fs::write(dir.join("law.toml"), LAW).unwrap();
    let path = dir.join("smoke.toml");
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn rows_cover_every_cell_once() {
    let dir = tempfile::tempdir().unwrap();
    let exp = load_experiment(write_config(dir.path(), CONFIG)).unwrap();
    let out = run_experiment(&exp).unwrap();
    assert_eq!(out.rows.len(), 2 * 2 * 2);
    let keys: BTreeSet<_> = out.rows.iter().map(|r| (r.n, r.m, r.trial)).collect();
    assert_eq!(keys.len(), out.rows.len());
    let sorted = out.rows.windows(2).all(|p| (p[0].n, p[0].k, p[0].m, p[0].trial) < (p[1].n, p[1].k, p[1].m, p[1].trial));
    assert!(sorted);
    for r in &out.rows {
        assert_eq!(r.seed, trial_seed(42, r.n, r.trial));
        let (e, se) = (r.ensemble_excess.unwrap(), r.ensemble_excess_se.unwrap());
        assert!(e >= -3.0 * se);
        assert!(r.psi_hat.is_some() && r.bracket_total.is_some());
    }
    let back = read_results(&out.csv).unwrap();
    assert_eq!(back, out.rows);
    let text = std::fs::read_to_string(&out.csv).unwrap();
    assert!(!text.contains('\r'));
    assert!(text.starts_with(
        "n,k,m,trial,seed,member_mean_excess,ensemble_excess,ensemble_excess_se,psi_hat,bracket_total,wall_time_ms,error\n"
    ));
}

#[test]
fn manifest_hash_matches_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), CONFIG);
    let out = run_experiment(&load_experiment(&path).unwrap()).unwrap();
    let manifest = std::fs::read_to_string(&out.manifest).unwrap();
    let lines: Vec<serde_json::Value> = manifest.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines[0]["record"], "run");
    assert_eq!(lines[0]["config_hash"], sha256_hex(&std::fs::read(&path).unwrap()));
    assert_eq!(lines[0]["library_version"], env!("CARGO_PKG_VERSION"));
    let cells: Vec<_> = lines[1..].iter().filter(|l| l["record"] == "cell").collect();
    assert_eq!(cells.len(), 4);
    for c in cells {
        assert_eq!(c["trial_seeds"].as_array().unwrap().len(), 2);
    }
}

#[test]
fn single_cell_single_trial_gives_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let text = CONFIG.replace("trials = 2", "trials = 1").replace("n = [64, 128]", "n = [64]").replace("m = [1, 3]", "m = [3]");
    let out = run_experiment(&load_experiment(write_config(dir.path(), &text)).unwrap()).unwrap();
    assert_eq!(std::fs::read_to_string(out.csv).unwrap().lines().count(), 2);
}

#[test]
fn regression_rule_at_one_million() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"
name = "big"
master_seed = 1
trials = 1
n_test = 1000
loss = "squared"
family = "achlioptas_sparse"
n = [1000000]
m = [1]
regression_iters = 5
k_rule = { rule = "regression" }
distribution = { variant = "regression", d = 16, omega = 0.5, beta = 1.0, w_max = 1.0 }
"#;
    let path = dir.path().join("big.toml");
    std::fs::write(&path, text).unwrap();
    let out = run_experiment(&load_experiment(&path).unwrap()).unwrap();
    assert_eq!(out.rows[0].k, 14);
    assert!(out.rows[0].error.is_none());
}

#[test]
fn thread_budget_does_not_change_results() {
    let mut csvs = Vec::new();
    for threads in [1, 2] {
        let dir = tempfile::tempdir().unwrap();
        let exp = load_experiment(write_config(dir.path(), CONFIG)).unwrap();
        let out = run_experiment_with_threads(&exp, Some(threads)).unwrap();
        let rows: Vec<_> = out.rows.into_iter().map(|r| (r.n, r.m, r.trial, r.ensemble_excess, r.psi_hat)).collect();
        csvs.push(rows);
    }
    assert_eq!(csvs[0], csvs[1]);
}

#[test]
fn invalid_config_reports_field_path() {
    let dir = tempfile::tempdir().unwrap();
    let text = CONFIG.replace("trials = 2", "trials = 0");
    match load_experiment(write_config(dir.path(), &text)) {
        Err(Error::Config { path, .. }) => assert_eq!(path, "trials"),
        other => panic!("{other:?}"),
    }
    let text = CONFIG.replace("k_rule = { rule = \"fixed\", k = 2 }", "k_rule = { rule = \"classification\", gamma = 1.0, rho = 2.0, alpha = 0.5 }");
    match load_experiment(write_config(dir.path(), &text)) {
        Err(Error::Config { path, .. }) => assert_eq!(path, "k_rule.gamma"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn failing_cells_are_recorded_and_the_run_continues() {
    let dir = tempfile::tempdir().unwrap();
    // the exact solver refuses n above its scale guard
    let text = CONFIG
        .replace("n = [64, 128]", "n = [64, 256]")
        .replace("psi_reps = 2", "solver = \"exact\"");
    let out = run_experiment(&load_experiment(write_config(dir.path(), &text)).unwrap()).unwrap();
    assert_eq!(out.rows.len(), 8);
    for r in &out.rows {
        assert_eq!(r.error.is_some(), r.n == 256, "{r:?}");
        assert_eq!(r.ensemble_excess.is_none(), r.n == 256);
    }
    let manifest = std::fs::read_to_string(&out.manifest).unwrap();
    assert!(manifest.contains("\"failures\":2"));
}
