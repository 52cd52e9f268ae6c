//! End-to-end invocations of the compiled binary: generate data, run
//! experiments against it, and check exit codes and artifacts.

use std::path::Path;
use std::process::{Command, Output};

fn encqr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_encqr"))
        .args(args)
        .output()
        .expect("binary should spawn")
}

fn assert_success(out: &Output) {
    assert!(
        out.status.success(),
        "exit {:?}\nstdout: {}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

/// Fast linear-model config over a generated CSV.
fn csv_config(csv: &Path) -> String {
    format!(
        r#"
        [data]
        source = "csv"
        path = "{}"
        target_column = "target"

        [split]
        mode = "fractions"
        train = 0.5
        val = 0.25
        test = 0.25

        [model]
        kind = "linear"
        [model.linear]
        epochs = 30

        [method]
        name = "encqr"
        alpha = 0.1

        [ensemble]
        b = 2

        [window]
        n_x = 24
        n_y = 8
        s = 8

        [run]
        seed = 5
        "#,
        csv.display()
    )
}

#[test]
fn gen_then_run_produces_all_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("series.csv");
    let out = encqr(&[
        "gen",
        "--out",
        csv.to_str().unwrap(),
        "--kind",
        "heteroscedastic_daily",
        "--length",
        "960",
        "--seed",
        "3",
    ]);
    assert_success(&out);
    let contents = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(contents.lines().count(), 961, "header plus one row per step");
    assert!(contents.lines().next().unwrap().contains("target"));

    let config = dir.path().join("run.toml");
    std::fs::write(&config, csv_config(&csv)).unwrap();
    let run_dir = dir.path().join("run_out");
    let out = encqr(&[
        "run",
        "--config",
        config.to_str().unwrap(),
        "--out",
        run_dir.to_str().unwrap(),
    ]);
    assert_success(&out);
    for artifact in ["metrics.json", "intervals.csv", "per_hour.csv"] {
        assert!(run_dir.join(artifact).is_file(), "missing {artifact}");
    }
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("picp"), "summary missing from stdout: {stdout}");
}

#[test]
fn reruns_write_byte_identical_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("series.csv");
    assert_success(&encqr(&["gen", "--out", csv.to_str().unwrap(), "--length", "960"]));
    let config = dir.path().join("run.toml");
    std::fs::write(&config, csv_config(&csv)).unwrap();

    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out_dir in [&a, &b] {
        assert_success(&encqr(&[
            "run",
            "--config",
            config.to_str().unwrap(),
            "--out",
            out_dir.to_str().unwrap(),
        ]));
    }
    assert_eq!(
        std::fs::read(a.join("metrics.json")).unwrap(),
        std::fs::read(b.join("metrics.json")).unwrap()
    );
}

#[test]
fn set_overrides_reach_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("series.csv");
    assert_success(&encqr(&["gen", "--out", csv.to_str().unwrap(), "--length", "960"]));
    let config = dir.path().join("run.toml");
    std::fs::write(&config, csv_config(&csv)).unwrap();
    let run_dir = dir.path().join("out");
    assert_success(&encqr(&[
        "run",
        "--config",
        config.to_str().unwrap(),
        "--set",
        "method.alpha=0.2",
        "--out",
        run_dir.to_str().unwrap(),
    ]));
    let metrics = std::fs::read_to_string(run_dir.join("metrics.json")).unwrap();
    assert!(metrics.contains("\"alpha\": 0.2"), "override not applied: {metrics}");
}

#[test]
fn config_errors_exit_with_code_one() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.toml");
    let csv = dir.path().join("series.csv");
    assert_success(&encqr(&["gen", "--out", csv.to_str().unwrap(), "--length", "960"]));
    std::fs::write(&config, csv_config(&csv).replace("\"encqr\"", "\"mystery\"")).unwrap();
    let out = encqr(&["run", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn runtime_errors_exit_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.toml");
    std::fs::write(&config, csv_config(&dir.path().join("missing.csv"))).unwrap();
    let out = encqr(&["run", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn compare_writes_table_and_per_method_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("series.csv");
    assert_success(&encqr(&["gen", "--out", csv.to_str().unwrap(), "--length", "960"]));
    let config = dir.path().join("run.toml");
    std::fs::write(&config, csv_config(&csv)).unwrap();
    let out_dir = dir.path().join("cmp");
    let out = encqr(&[
        "compare",
        "--config",
        config.to_str().unwrap(),
        "--methods",
        "encqr,enbpi,raw_qr",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_success(&out);
    let table = std::fs::read_to_string(out_dir.join("compare.csv")).unwrap();
    assert!(table.starts_with("method,picp,pinaw,cwc,bound_swaps"));
    for method in ["encqr", "enbpi", "raw_qr"] {
        assert!(table.contains(&format!("\n{method},")), "{method} missing from {table}");
        assert!(out_dir.join(method).join("metrics.json").is_file());
    }
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("enbpi"), "table missing from stdout: {stdout}");
}
