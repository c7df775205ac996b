use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use robust_forward_cli::{run_experiment, Experiment, ExperimentConfig};
use tempfile::TempDir;

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_robust-forward"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("run.toml");
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn defaults_round_trip_through_toml() {
    for e in Experiment::ALL {
        let cfg = ExperimentConfig::defaults(e);
        let text = cfg.to_toml_string().unwrap();
        assert_eq!(ExperimentConfig::from_toml_str(&text).unwrap(), cfg, "{e}");
    }
}

#[test]
fn partial_config_takes_experiment_and_fixture_defaults() {
    let cfg = ExperimentConfig::from_toml_str(
        "experiment = \"risk_sensitive\"\nfixture = \"model2\"\n[numerics]\npaths = 10\n",
    )
    .unwrap();
    let mut want = ExperimentConfig::defaults(Experiment::RiskSensitive);
    want.fixture = cfg.fixture;
    want.model = robust_forward::fixtures::FixtureParams::for_kind(cfg.fixture);
    want.numerics.paths = 10;
    assert_eq!(cfg, want);
    assert_eq!(cfg.numerics.horizon, 20.0);
}

#[test]
fn config_errors_name_the_key() {
    let cases = [
        ("experiment = \"model1\"\n[numerics]\npath = 3\n", "path"),
        ("experiment = \"model1\"\n[model]\ndelta = \"x\"\n", "delta"),
        ("[numerics]\npaths = 3\n", "experiment"),
        ("experiment = \"model1\"\njobs = 0\n", "jobs"),
        (
            "experiment = \"model1\"\n[numerics]\nmc_dt = -1.0\n",
            "numerics.mc_dt",
        ),
        ("experiment = \"nope\"\n", "nope"),
    ];
    for (text, key) in cases {
        let err = format!("{:#}", ExperimentConfig::from_toml_str(text).unwrap_err());
        assert!(err.contains(key), "`{key}` not named in: {err}");
    }
}

#[test]
fn reruns_are_byte_identical_and_summary_lists_real_files() {
    let dir = TempDir::new().unwrap();
    let mut cfg = ExperimentConfig::defaults(Experiment::Model1);
    cfg.numerics.paths = 400;
    cfg.out = dir.path().join("a");
    let a = run_experiment(&cfg).unwrap();
    cfg.out = dir.path().join("b");
    let b = run_experiment(&cfg).unwrap();
    let listed: Vec<String> = a.summary["files"]
        .as_array()
        .unwrap()
        .iter()
        .map(|f| f.as_str().unwrap().to_owned())
        .collect();
    assert!(listed.contains(&"summary.json".to_owned()));
    for f in &listed {
        let x = fs::read(a.out_dir.join(f)).unwrap();
        let y = fs::read(b.out_dir.join(f)).unwrap();
        assert!(x == y, "{f} differs");
    }
    let on_disk = fs::read_dir(&a.out_dir).unwrap().count();
    assert_eq!(on_disk, listed.len());
    assert_eq!(a.summary["passed"], a.passed());
}

#[test]
fn seed_changes_monte_carlo_output() {
    let dir = TempDir::new().unwrap();
    let mut cfg = ExperimentConfig::defaults(Experiment::Model1);
    cfg.numerics.paths = 200;
    cfg.out = dir.path().join("a");
    let a = run_experiment(&cfg).unwrap();
    cfg.seed += 1;
    cfg.out = dir.path().join("b");
    let b = run_experiment(&cfg).unwrap();
    let est = |o: &robust_forward_cli::RunOutcome| o.report("ratio(pi*, u*)").unwrap().estimate;
    assert_ne!(est(&a), est(&b));
}

#[test]
fn nonrobust_run_reports_the_analytic_rate() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("nr");
    let o = bin(&[
        "run",
        "nonrobust",
        "--theta",
        "0.4",
        "--delta",
        "0.5",
        "--paths",
        "0",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("lambda = 0.0800000000"), "{text}");
    assert!(text.contains("[pass] analytic rate"));
    assert!(out.join("summary.json").exists());
}

#[test]
fn solve_large_uncertainty_gives_zero_rate() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("lu");
    let o = bin(&[
        "solve",
        "--fixture",
        "large_uncertainty",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("lambda = 0.0000000000"));
}

#[test]
fn failed_checks_exit_with_one_and_are_named() {
    let dir = TempDir::new().unwrap();
    let config = write_config(
        dir.path(),
        "experiment = \"model1\"\n[numerics]\ntransient_tol = 1e3\npaths = 0\n",
    );
    let out = dir.path().join("bad");
    let o = bin(&[
        "run",
        "model1",
        "--config",
        &config,
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("check failed: methods agree"));
}

#[test]
fn errors_exit_with_two() {
    let o = bin(&["run", "nonrobust", "--jobs", "0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("`jobs`"));
    let dir = TempDir::new().unwrap();
    let config = write_config(dir.path(), "experiment = \"model2\"\n");
    let o = bin(&["run", "model1", "--config", &config]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("model2"));
}

#[test]
fn driver_eval_prints_the_section7_point() {
    let o = bin(&[
        "driver",
        "eval",
        "--fixture",
        "section7",
        "--v",
        "0",
        "--z",
        "0.3",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["g"].as_f64().unwrap() + 0.12).abs() < 1e-12);
    assert!((v["oracle"].as_f64().unwrap() + 0.12).abs() < 2e-3);
}

#[test]
fn zero_paths_skip_the_game() {
    let dir = TempDir::new().unwrap();
    let mut cfg = ExperimentConfig::defaults(Experiment::RiskSensitive);
    cfg.numerics.paths = 0;
    cfg.out = dir.path().join("rs");
    let o = run_experiment(&cfg).unwrap();
    assert!(o.reports.is_empty() && o.passed());
    assert!(o.summary["results"].get("game").is_none());
}
