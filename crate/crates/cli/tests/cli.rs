use std::path::Path;
use std::process::{Command, Output};

fn sfde(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sfde"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn only_subdir(dir: &Path) -> std::path::PathBuf {
    let entries: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    assert_eq!(entries.len(), 1, "{entries:?}");
    entries.into_iter().next().unwrap()
}

#[test]
fn list_models_prints_registry() {
    let tmp = tempfile::tempdir().unwrap();
    let o = sfde(&["list-models"], tmp.path());
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    for name in [
        "delayed_ou",
        "power_delay",
        "counterexample_beta0",
        "reconstruction",
        "ou-boundary",
    ] {
        assert!(out.contains(name), "{out}");
    }
}

#[test]
fn usage_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(sfde(&["frobnicate"], tmp.path()).status.code(), Some(2));
    assert_eq!(sfde(&["simulate"], tmp.path()).status.code(), Some(2));
    assert_eq!(
        sfde(&["repro", "ou-boundary", "--bogus"], tmp.path())
            .status
            .code(),
        Some(2)
    );
    let o = sfde(&["repro", "no-such-experiment"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("ou_boundary"), "{}", stderr(&o));
}

#[test]
fn invalid_config_key_is_named() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.toml");
    std::fs::write(
        &cfg,
        "seed = 1\n[experiment]\nname = \"ou_boundary\"\nlambdaz = [1.0, 2.0]\n",
    )
    .unwrap();
    let o = sfde(
        &["repro", "ou-boundary", "--config", cfg.to_str().unwrap()],
        tmp.path(),
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("lambdaz"), "{}", stderr(&o));

    std::fs::write(
        &cfg,
        "t_end = 1.0\nn_paths = 2\nstepsize = 3\n[model]\nname = \"brownian\"\n",
    )
    .unwrap();
    let o = sfde(&["simulate", "--config", cfg.to_str().unwrap()], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("stepsize"), "{}", stderr(&o));
}

#[test]
fn repro_writes_report_and_reflects_verdicts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("cfg.toml");
    std::fs::write(
        &cfg,
        "seed = 3\n[experiment]\nname = \"counterexample_betapos\"\nn_paths = 32\nhorizon = 4\n",
    )
    .unwrap();
    let o = sfde(
        &[
            "repro",
            "counterexample-betapos",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            "out",
        ],
        tmp.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
    assert!(stdout(&o).contains("PASS escape_bound"));
    let run = only_subdir(&tmp.path().join("out"));
    assert!(run
        .file_name()
        .unwrap()
        .to_str()
        .unwrap()
        .starts_with("counterexample_betapos-"));
    let first = std::fs::read_to_string(run.join("report.json")).unwrap();
    assert!(run.join("series.csv").exists());
    let again = sfde(
        &[
            "repro",
            "counterexample-betapos",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            "out",
        ],
        tmp.path(),
    );
    assert_eq!(again.status.code(), Some(0));
    assert_eq!(
        std::fs::read_to_string(run.join("report.json")).unwrap(),
        first
    );

    // a different seed lands in a different run directory
    let o = sfde(
        &[
            "repro",
            "counterexample-betapos",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            "out",
            "--seed",
            "4",
        ],
        tmp.path(),
    );
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(
        std::fs::read_dir(tmp.path().join("out")).unwrap().count(),
        2
    );

    let o = sfde(
        &["repro", "ou-boundary", "--config", cfg.to_str().unwrap()],
        tmp.path(),
    );
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn failing_criterion_exits_1() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("verify.toml");
    std::fs::write(
        &cfg,
        "n_samples = 40\n[model]\nname = \"brownian\"\n[[checks]]\ncheck = \"vk\"\nsigma = 0.1\nbig_m = 1.0\n",
    )
    .unwrap();
    let o = sfde(
        &["verify", "--config", cfg.to_str().unwrap(), "--out", "v"],
        tmp.path(),
    );
    assert_eq!(o.status.code(), Some(1), "{}{}", stdout(&o), stderr(&o));
    assert!(stdout(&o).contains("FAIL vk"));
    let run = only_subdir(&tmp.path().join("v"));
    assert!(run.join("vk_witnesses.csv").exists());
}

#[test]
fn simulate_then_fit_rate() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("sim.toml");
    std::fs::write(
        &cfg,
        "seed = 2\nt_end = 2.0\nn_paths = 4\nn_grid = 20\ndt = 0.05\ntimes = [1.0, 2.0]\n[model]\nname = \"delayed_ou\"\nlambda = 1.0\n",
    )
    .unwrap();
    let o = sfde(
        &[
            "simulate",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            "sim",
        ],
        tmp.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let run = only_subdir(&tmp.path().join("sim"));
    let csv = std::fs::read_to_string(run.join("ensemble.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * 4 * 21);
    assert!(run.join("manifest.json").exists());

    let curve = tmp.path().join("curve.csv");
    let body: String = std::iter::once("t,W,CI\n".to_string())
        .chain((1..=10).map(|k| format!("{k},{},0\n", (-0.25 * k as f64).exp())))
        .collect();
    std::fs::write(&curve, body).unwrap();
    let o = sfde(
        &[
            "fit-rate",
            "--curve",
            curve.to_str().unwrap(),
            "--alpha",
            "0.5",
            "--out",
            "fit",
        ],
        tmp.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("Exponential"), "{}", stdout(&o));
    let run = only_subdir(&tmp.path().join("fit"));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(run.join("report.json")).unwrap()).unwrap();
    let lambda2 = report["metrics"]["fit/exponential_lambda2"]
        .as_f64()
        .unwrap();
    assert!((lambda2 - 0.25).abs() < 1e-9, "{lambda2}");
}
