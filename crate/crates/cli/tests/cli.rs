use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn compens(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_compens"))
        .args(args)
        .current_dir(cwd)
        .env_remove("COMPENS_THREADS")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

const LAW: &str = "variant = \"gauss_margin\"\nd = 5\ngamma = 2.0\nrho = 3.0\nalpha = 0.5\n";

const CONFIG: &str = r#"
name = "cli"
master_seed = 3
trials = 2
n_test = 2000
loss = "zero_one"
family = "gaussian"
n = [64, 128, 256]
m = [3]
k_rule = { rule = "fixed", k = 2 }
distribution = "law.toml"
"#;

#[test]
fn run_then_fit() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("law.toml"), LAW).unwrap();
    std::fs::write(dir.path().join("cli.toml"), CONFIG).unwrap();
    let v = json(&compens(&["run", "cli.toml", "--threads", "1"], dir.path()));
    assert_eq!(v["rows"], 6);
    assert_eq!(v["failed"], 0);
    assert!(dir.path().join("cli.csv").exists());
    assert!(dir.path().join("cli.manifest.jsonl").exists());
    let fit = json(&compens(&["fit", "--x", "n", "--y", "member_mean_excess", "cli.csv"], dir.path()));
    assert_eq!(fit["points"].as_array().unwrap().len(), 3);
    assert!(fit["slope"].as_f64().unwrap().is_finite());
}

#[test]
fn fit_with_two_points_fails() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("law.toml"), LAW).unwrap();
    std::fs::write(dir.path().join("cli.toml"), CONFIG.replace("n = [64, 128, 256]", "n = [64, 128]")).unwrap();
    json(&compens(&["run", "cli.toml"], dir.path()));
    let out = compens(&["fit", "cli.csv"], dir.path());
    assert!(!out.status.success());
}

#[test]
fn check_dist_recovers_exponents() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("law.toml"), LAW).unwrap();
    let v = json(&compens(&["check-dist", "law.toml", "--mc-n", "200000"], dir.path()));
    let g = v["geometric_margin"]["exponent_hat"].as_f64().unwrap();
    let t = v["tsybakov"]["exponent_hat"].as_f64().unwrap();
    assert!((g - 2.0).abs() < 0.2, "{g}");
    assert!((t - 1.0).abs() < 0.2, "{t}");
}

#[test]
fn check_dist_on_regression_reports_spectrum() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("reg.toml"),
        "variant = \"regression\"\nd = 10\nomega = 0.5\nbeta = 1.0\nw_max = 1.0\n",
    )
    .unwrap();
    let v = json(&compens(&["check-dist", "reg.toml"], dir.path()));
    let w = v["spectral"]["omega_hat"].as_f64().unwrap();
    assert!((w - 0.5).abs() < 0.05, "{w}");
}

#[test]
fn psi_jl_and_slawski() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("law.toml"), LAW).unwrap();
    let v = json(&compens(
        &["psi", "law.toml", "--k-list", "1,3", "--reps", "2", "--pop-n", "500", "--n-test", "2000"],
        dir.path(),
    ));
    assert_eq!(v.as_array().unwrap().len(), 2);

    let jl = json(&compens(&["jl-check", "--trials", "50", "--d", "100"], dir.path()));
    assert_eq!(jl["k"], 222);
    assert!(jl["failure_rate"].as_f64().unwrap() <= 0.1);

    let s = json(&compens(&["slawski-check", "--sketches", "10"], dir.path()));
    assert_eq!(s["sketches"], 10);
}

#[test]
fn bad_config_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("law.toml"), LAW).unwrap();
    std::fs::write(dir.path().join("cli.toml"), CONFIG.replace("m = [3]", "m = []")).unwrap();
    let out = compens(&["run", "cli.toml"], dir.path());
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("m"));
}
