//! End-to-end tests of the installed binary: pipeline smoke run, the
//! determinism contract, dependency and usage errors, ingest behavior.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn aftershock(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aftershock"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_ok(args: &[&str]) -> String {
    let out = aftershock(args);
    assert!(
        out.status.success(),
        "command {args:?} failed:\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

fn out_dir(dir: &Path) -> String {
    format!("output_dir={}", dir.join("out").display())
}

fn read(path: &Path) -> String {
    fs::read_to_string(path).unwrap_or_else(|e| panic!("read {}: {e}", path.display()))
}

#[test]
fn full_pipeline_emits_every_artifact() {
    let tmp = tempfile::tempdir().expect("tempdir");
    let set_dir = out_dir(tmp.path());
    let out = tmp.path().join("out");
    run_ok(&["--set", &set_dir, "--set", "svg=true", "simulate"]);
    run_ok(&["--set", &set_dir, "--set", "svg=true", "calibrate"]);
    run_ok(&["--set", &set_dir, "--set", "svg=true", "--set", "shock_count=27", "omori"]);
    run_ok(&["--set", &set_dir, "--set", "svg=true", "--set", "shock_count=27", "predict"]);
    run_ok(&["--set", &set_dir, "--set", "shock_count=27", "report"]);

    for name in [
        "ensemble.csv",
        "params",
        "gamma_q.csv",
        "collapse.csv",
        "aftershocks_empirical.csv",
        "aftershocks_predicted.csv",
        "omori_fits.csv",
        "figure_scaling.svg",
        "figure_collapse.svg",
        "figure_omori.svg",
        "figure_prediction.svg",
        "manifest_simulate.json",
        "manifest_calibrate.json",
        "manifest_omori.json",
        "manifest_predict.json",
        "manifest_report.json",
        "report/report.md",
        "report/fit_table.md",
        "report/figure_scaling.svg",
        "report/figure_collapse.svg",
        "report/figure_omori.svg",
        "report/figure_prediction.svg",
        "report/params",
        "report/omori_fits.csv",
    ] {
        assert!(out.join(name).is_file(), "missing artifact {name}");
    }

    // Calibration on the default simulated ensemble must land near the
    // generating parameters; wide bands, this is a smoke test.
    let params = read(&out.join("params"));
    let value = |key: &str| -> f64 {
        params
            .lines()
            .find_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
            .unwrap_or_else(|| panic!("{key} missing in params file:\n{params}"))
            .parse()
            .expect("numeric param")
    };
    assert!((value("D") - 0.35).abs() < 0.05, "D={}", value("D"));
    assert!((value("alpha") - 3.5).abs() < 0.8, "alpha={}", value("alpha"));
    assert!((value("beta") - 2.9e-3).abs() < 1e-3, "beta={}", value("beta"));

    // Predicted table: 4 thresholds x 19 bars, se identically zero, and the
    // file carries its manifest reference.
    let predicted = read(&out.join("aftershocks_predicted.csv"));
    assert!(predicted.starts_with("# manifest=manifest_predict.json"));
    let rows: Vec<&str> = predicted
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("sigma_a") && !l.is_empty())
        .collect();
    assert_eq!(rows.len(), 4 * 19);
    for row in rows {
        let se: f64 = row.rsplit(',').next().expect("se field").parse().expect("number");
        assert_eq!(se, 0.0, "predicted curves are analytic: {row}");
    }
}

#[test]
fn rerunning_with_the_same_seed_is_byte_identical() {
    let tmp = tempfile::tempdir().expect("tempdir");
    let mut outs: Vec<PathBuf> = Vec::new();
    for run in ["first", "second"] {
        let dir = tmp.path().join(run);
        let set_dir = format!("output_dir={}", dir.display());
        run_ok(&["--set", &set_dir, "--set", "sim_seed=42", "simulate"]);
        run_ok(&["--set", &set_dir, "simulate"]); // overwrite: same seed again
        run_ok(&["--set", &set_dir, "calibrate"]);
        outs.push(dir);
    }
    for name in ["ensemble.csv", "params", "gamma_q.csv", "collapse.csv"] {
        let a = fs::read(outs[0].join(name)).expect("first run artifact");
        let b = fs::read(outs[1].join(name)).expect("second run artifact");
        assert_eq!(a, b, "{name} differs between identical runs");
    }
}

#[test]
fn predict_before_calibrate_is_a_dependency_error() {
    let tmp = tempfile::tempdir().expect("tempdir");
    let set_dir = out_dir(tmp.path());
    run_ok(&["--set", &set_dir, "--set", "sim_count=300", "simulate"]);
    let out = aftershock(&["--set", &set_dir, "--set", "shock_count=5", "predict"]);
    assert_eq!(exit_code(&out), 3);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("params"), "error must name the file: {stderr}");
    assert!(stderr.contains("calibrate"), "error must name the producer: {stderr}");
}

#[test]
fn missing_ensemble_is_a_dependency_error() {
    let tmp = tempfile::tempdir().expect("tempdir");
    let set_dir = out_dir(tmp.path());
    let out = aftershock(&["--set", &set_dir, "--set", "shock_count=5", "omori"]);
    assert_eq!(exit_code(&out), 3);
    assert!(
        String::from_utf8_lossy(&out.stderr).contains("ensemble.csv"),
        "error must name the missing file"
    );
}

#[test]
fn config_mistakes_are_usage_errors() {
    let out = aftershock(&["--set", "bogus=1", "simulate"]);
    assert_eq!(exit_code(&out), 2);
    let out = aftershock(&["--set", "sim_seed=not-a-number", "simulate"]);
    assert_eq!(exit_code(&out), 2);
    let tmp = tempfile::tempdir().expect("tempdir");
    let set_dir = out_dir(tmp.path());
    let out = aftershock(&["--set", &set_dir, "--set", "sim_count=40", "simulate"]);
    assert_eq!(exit_code(&out), 0);
    // omori without a threshold source: config error before any counting.
    let out = aftershock(&["--set", &set_dir, "omori"]);
    assert_eq!(exit_code(&out), 2);
}

#[test]
fn overrides_win_over_the_config_file() {
    let tmp = tempfile::tempdir().expect("tempdir");
    let conf = tmp.path().join("run.conf");
    let out = tmp.path().join("out");
    fs::write(
        &conf,
        format!("output_dir={}\nsim_count=40\nsim_seed=1\n", out.display()),
    )
    .expect("write config");
    run_ok(&["--config", conf.to_str().expect("utf8"), "--set", "sim_seed=7", "simulate"]);
    let ensemble = read(&out.join("ensemble.csv"));
    assert!(ensemble.contains("# seed=7"), "override lost:\n{ensemble}");
}

#[test]
fn ingest_builds_histories_and_drops_incomplete_days() {
    let tmp = tempfile::tempdir().expect("tempdir");
    let prices = tmp.path().join("prices.csv");
    let mut csv = String::from("timestamp,price\n");
    let mut price = 1130.0;
    for (day, missing_slot) in [("2004-03-01", None), ("2004-03-02", Some(14)), ("2004-03-03", None)] {
        for slot in 0..21u32 {
            price *= 1.0 + 1e-3 * f64::from(slot % 3) - 1e-3;
            if Some(slot) == missing_slot {
                continue;
            }
            let minutes = 9 * 60 + 40 + 10 * slot;
            csv.push_str(&format!(
                "{day}T{:02}:{:02}:00-05:00,{price:.4}\n",
                minutes / 60,
                minutes % 60
            ));
        }
    }
    fs::write(&prices, csv).expect("write prices");

    let set_dir = out_dir(tmp.path());
    let set_input = format!("input={}", prices.display());
    let stdout = run_ok(&["--set", &set_dir, "--set", &set_input, "ingest"]);
    assert!(stdout.contains("2 complete days"), "{stdout}");
    let ensemble = read(&tmp.path().join("out").join("ensemble.csv"));
    assert!(ensemble.contains("# days_dropped_incomplete=1"));
    assert!(ensemble.contains("# dropped=2004-03-02"));
    let data_rows = ensemble.lines().filter(|l| l.starts_with("2004-")).count();
    assert_eq!(data_rows, 2);

    // Ingest without an input path is a usage error.
    let out = aftershock(&["--set", &set_dir, "ingest"]);
    assert_eq!(exit_code(&out), 2);
}
