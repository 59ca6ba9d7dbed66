use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn oarima(args: &[&str], out_dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_oarima"))
        .args(args)
        .env("OARIMA_OUT_DIR", out_dir)
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn synth_writes_a_value_column() {
    let dir = tempfile::tempdir().unwrap();
    let out = oarima(&["synth", "--preset", "2", "--seed", "4"], dir.path());
    assert!(out.status.success(), "{}", stderr(&out));
    let text = fs::read_to_string(dir.path().join("synth_2.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("value"));
    let values: Vec<f64> = lines.map(|l| l.parse().unwrap()).collect();
    assert_eq!(values.len(), 10_000);
    assert!(values.iter().all(|v| (-1.0..=1.0).contains(v)));
}

#[test]
fn run_on_csv_series_writes_curves_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("series.csv");
    assert!(oarima(&["synth", "--preset", "1", "--out", data.to_str().unwrap()], dir.path())
        .status
        .success());
    let out = oarima(
        &[
            "run", "--data", data.to_str().unwrap(), "--mk", "5", "--trials", "3",
            "--optimizer", "basic,combined:500", "--name", "s1",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let csv = fs::read_to_string(dir.path().join("s1_combined.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,r_mean,r_trial_1,r_trial_2,r_trial_3"));
    assert_eq!(lines.count(), 10_000 - 5);
    assert!(dir.path().join("s1_basic.csv").exists());
    let svg = fs::read_to_string(dir.path().join("s1.svg")).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 2);
}

#[test]
fn batch_directory_run_is_per_batch() {
    let dir = tempfile::tempdir().unwrap();
    let batches = dir.path().join("batches");
    fs::create_dir(&batches).unwrap();
    for f in 0..4 {
        let text: String = (0..200)
            .map(|i| format!("{:.4}\t0.0\n", ((i + 7 * f) as f64 * 0.37).sin()))
            .collect();
        fs::write(batches.join(format!("snap{f}")), text).unwrap();
    }
    let out = oarima(
        &[
            "run", "--batch-dir", batches.to_str().unwrap(), "--limit", "3", "--mk", "8",
            "--trials", "2", "--lr", "0.01", "--optimizer", "amsgrad", "--name", "b",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let csv = fs::read_to_string(dir.path().join("b_amsgrad.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows.len(), 4);
    assert!(rows[1].starts_with("0,") && rows[3].starts_with("2,"));
}

#[test]
fn sweep_writes_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = oarima(
        &["sweep-lambda", "--preset", "2", "--mk", "10", "--trials", "2", "--lambdas", "100,1000", "--name", "sw"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let csv = fs::read_to_string(dir.path().join("sw_sweep.csv")).unwrap();
    let labels: Vec<&str> = csv.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(csv.lines().next(), Some("label,final_residual,diverged"));
    assert!(labels.contains(&"combined_lambda_100"));
    assert!(labels.contains(&"combined_lambda_1000"));
    assert!(labels.contains(&"amsgrad"));
}

#[test]
fn reproduce_dry_run_prints_explicit_command() {
    let dir = tempfile::tempdir().unwrap();
    let out = oarima(&["reproduce", "2", "--dry-run"], dir.path());
    assert!(out.status.success(), "{}", stderr(&out));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.starts_with("oarima run --preset 2"), "{stdout}");
    assert!(stdout.contains("--mk 10") && stdout.contains("--trials 30"));
}

#[test]
fn errors_exit_nonzero_with_one_line() {
    let dir = tempfile::tempdir().unwrap();
    let out = oarima(&["run", "--data", "/nonexistent/series.csv"], dir.path());
    assert!(!out.status.success());
    let err = stderr(&out);
    assert_eq!(err.trim_end().lines().count(), 1, "{err}");
    assert!(err.starts_with("error:"));

    let out = oarima(&["run", "--mk", "5"], dir.path());
    assert_eq!(out.status.code(), Some(2));

    let out = oarima(&["reproduce", "4"], dir.path());
    assert!(!out.status.success());
    assert!(stderr(&out).contains("--batch-dir"));
}
