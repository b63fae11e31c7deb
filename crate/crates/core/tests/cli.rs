use std::path::Path;
use std::process::{Command, Output};

use hdcox::harness::io::write_csv;
use hdcox::simulate::{generate, SigmaKind, SimSetting};

fn small_setting() -> SimSetting {
    SimSetting {
        id: 500,
        n: 150,
        p: 5,
        beta0: vec![1.0, 0.0, 0.0, 0.0, 0.0],
        sigma_kind: SigmaKind::Identity,
        censor_time: 5.0,
        expected_censor_rate: 0.1,
        baseline: 1.0,
    }
}

fn write_dataset(dir: &Path) -> std::path::PathBuf {
    let data = generate(&small_setting(), 0, 3).unwrap();
    let path = dir.join("data.csv");
    write_csv(&path, &data, None).unwrap();
    path
}

fn hdcox(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hdcox")).args(args).output().unwrap()
}

fn lines(path: &Path) -> Vec<String> {
    std::fs::read_to_string(path).unwrap().lines().map(str::to_string).collect()
}

#[test]
fn infer_writes_one_row_per_covariate() {
    let tmp = tempfile::tempdir().unwrap();
    let csv = write_dataset(tmp.path());
    let out = tmp.path().join("out");
    let res = hdcox(&["infer", csv.to_str().unwrap(), "--out", out.to_str().unwrap(), "--folds", "5"]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let rows = lines(&out.join("infer.tsv"));
    assert_eq!(rows.len(), 1 + 5);
    assert!(rows[1].starts_with("z1\t"));
    assert!(out.join("manifest.toml").exists());
}

#[test]
fn infer_is_reproducible_for_a_fixed_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let csv = write_dataset(tmp.path());
    let run = |name: &str| {
        let out = tmp.path().join(name);
        let res = hdcox(&["infer", csv.to_str().unwrap(), "--out", out.to_str().unwrap(), "--seed", "4", "--folds", "5"]);
        assert!(res.status.success());
        std::fs::read(out.join("infer.tsv")).unwrap()
    };
    assert_eq!(run("a"), run("b"));
}

#[test]
fn fit_at_fixed_penalty_and_along_path() {
    let tmp = tempfile::tempdir().unwrap();
    let csv = write_dataset(tmp.path());
    let single = tmp.path().join("single");
    let res = hdcox(&["fit", csv.to_str().unwrap(), "--lambda", "0.05", "--out", single.to_str().unwrap()]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    assert_eq!(lines(&single.join("fit.tsv")).len(), 2);
    assert!(single.join("coefficients.tsv").exists());

    let path = tmp.path().join("path");
    let res = hdcox(&["fit", csv.to_str().unwrap(), "--path", "--nlambda", "20", "--out", path.to_str().unwrap()]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    assert_eq!(lines(&path.join("fit.tsv")).len(), 21);
}

#[test]
fn lifespan_reports_every_covariate() {
    let tmp = tempfile::tempdir().unwrap();
    let csv = write_dataset(tmp.path());
    let out = tmp.path().join("out");
    let res = hdcox(&["lifespan", csv.to_str().unwrap(), "--nlambda", "30", "--folds", "5", "--out", out.to_str().unwrap()]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    assert_eq!(lines(&out.join("lifespan.tsv")).len(), 6);
    assert!(out.join("lifespan_summary.tsv").exists());
}

#[test]
fn simulate_accepts_a_setting_file() {
    let tmp = tempfile::tempdir().unwrap();
    let file = tmp.path().join("setting.toml");
    std::fs::write(&file, small_setting().to_toml().unwrap()).unwrap();
    let out = tmp.path().join("out");
    let res = hdcox(&[
        "simulate",
        "--setting-file",
        file.to_str().unwrap(),
        "--reps",
        "2",
        "--folds",
        "5",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    for name in ["summary.tsv", "coords.tsv", "tuning.tsv", "replications.tsv", "manifest.toml"] {
        assert!(out.join(name).exists(), "{name} missing");
    }
    assert_eq!(lines(&out.join("coords.tsv")).len(), 1 + 5);
}

#[test]
fn malformed_csv_is_an_input_error() {
    let tmp = tempfile::tempdir().unwrap();
    let csv = tmp.path().join("bad.csv");
    std::fs::write(&csv, "time,status,z1\n1.0,1,0.5\n2.0,1,abc\n").unwrap();
    let res = hdcox(&["infer", csv.to_str().unwrap(), "--out", tmp.path().join("o").to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(1));
    let err = String::from_utf8_lossy(&res.stderr);
    assert!(err.contains("z1"), "{err}");
}

#[test]
fn unknown_setting_and_bad_flags_exit_with_one() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    assert_eq!(hdcox(&["simulate", "--setting", "99", "--out", out.to_str().unwrap()]).status.code(), Some(1));
    assert_eq!(hdcox(&["simulate", "--reps", "many"]).status.code(), Some(1));
    assert_eq!(hdcox(&["fit", "missing.csv", "--lambda", "-1"]).status.code(), Some(1));
}

#[test]
fn missing_input_file_is_an_input_error() {
    let tmp = tempfile::tempdir().unwrap();
    let res = hdcox(&["infer", tmp.path().join("none.csv").to_str().unwrap(), "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(1));
}
