use std::fs::File;
use std::path::Path;
use std::process::{Command, Output};

use lrmar::persist::load_model;
use lrmar::series::read_matrix_csv;
use lrmar::TimeSeries;

fn lrmar(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lrmar")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> Output {
    let out = lrmar(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn matrix(path: &Path) -> nalgebra::DMatrix<f64> {
    read_matrix_csv(File::open(path).unwrap()).unwrap()
}

#[test]
fn simulate_fit_transform_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let p = |name: &str| dir.path().join(name).to_str().unwrap().to_string();
    ok(&["simulate", "--T", "4000", "--N", "12", "--seed", "1", "--out", &p("y.csv"), "--clean-out", &p("clean.csv")]);
    let y = TimeSeries::from_csv_path(p("y.csv")).unwrap();
    assert_eq!((y.len(), y.channels()), (4000, 12));
    assert_eq!(TimeSeries::from_csv_path(p("clean.csv")).unwrap().len(), 4000);

    ok(&["fit", "--in", &p("y.csv"), "--P", "6", "--Q", "6", "--out", &p("model.json")]);
    let model = load_model(p("model.json")).unwrap();
    assert_eq!((model.spec.p, model.spec.q), (6, 6));

    ok(&["transform", "--model", &p("model.json"), "--in", &p("y.csv"), "--out", &p("z.csv")]);
    let z = matrix(Path::new(&p("z.csv")));
    assert_eq!((z.nrows(), z.ncols()), (3994, 6));

    ok(&["reconstruct", "--model", &p("model.json"), "--in", &p("z.csv"), "--out", &p("yhat.csv")]);
    let y_hat = matrix(Path::new(&p("yhat.csv")));
    assert_eq!((y_hat.nrows(), y_hat.ncols()), (3994, 12));

    ok(&["predict", "--model", &p("model.json"), "--in", &p("y.csv"), "--out", &p("pred.csv"), "--cov-out", &p("cov.csv")]);
    let pred = matrix(Path::new(&p("pred.csv")));
    assert_eq!((pred.nrows(), pred.ncols()), (3995, 12));
    let cov = matrix(Path::new(&p("cov.csv")));
    assert_eq!((cov.nrows(), cov.ncols()), (12, 12));
}

#[test]
fn select_writes_every_restart_and_the_best_pair() {
    let dir = tempfile::tempdir().unwrap();
    let p = |name: &str| dir.path().join(name).to_str().unwrap().to_string();
    ok(&["simulate", "--T", "300", "--N", "4", "--out", &p("y.csv")]);
    let out = ok(&[
        "select", "--in", &p("y.csv"), "--P", "1..2", "--Q", "1..3", "--repeats", "2", "--workers", "1",
        "--max-iter", "20000", "--accelerate", "--out", &p("grid.csv"),
    ]);
    let text = std::fs::read_to_string(p("grid.csv")).unwrap();
    let rows = text.lines().filter(|l| !l.starts_with('#')).count() - 1;
    assert_eq!(rows, 2 * 3 * 2);
    assert!(text.lines().last().unwrap().starts_with("# best P="));
    assert!(String::from_utf8_lossy(&out.stdout).contains("best P="));
}

#[test]
fn wcca_writes_model_and_latents() {
    let dir = tempfile::tempdir().unwrap();
    let p = |name: &str| dir.path().join(name).to_str().unwrap().to_string();
    ok(&["simulate", "--T", "500", "--N", "4", "--out", &p("y.csv")]);
    ok(&["wcca", "--in", &p("y.csv"), "--P", "3", "--Q", "2", "--out", &p("w.json"), "--z-out", &p("z.csv")]);
    let post = lrmar::persist::wcca_from_json(&std::fs::read_to_string(p("w.json")).unwrap()).unwrap();
    assert_eq!(post.spec.q, 2);
    assert_eq!(matrix(Path::new(&p("z.csv"))).nrows(), 500 - 3 - 3 + 1);
}

#[test]
fn bench_writes_one_row_per_method_target_and_rank() {
    let dir = tempfile::tempdir().unwrap();
    let p = |name: &str| dir.path().join(name).to_str().unwrap().to_string();
    ok(&["bench", "--T", "300", "--N", "4", "--P", "2", "--Q", "1..2", "--seeds", "2", "--out", &p("b.csv")]);
    let text = std::fs::read_to_string(p("b.csv")).unwrap();
    assert_eq!(text.lines().count(), 1 + 2 * 2 * 2 * 2);
}

#[test]
fn exit_codes() {
    assert_eq!(lrmar(&["fit", "--bogus"]).status.code(), Some(1));
    assert_eq!(lrmar(&["--help"]).status.code(), Some(0));
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.csv");
    let out = lrmar(&["fit", "--in", missing.to_str().unwrap(), "--P", "1", "--Q", "1", "--out", "m.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("lrmar: "));

    let y = dir.path().join("y.csv");
    std::fs::write(&y, "a,b\n1,2\n3,4\n5,6\n").unwrap();
    let out = lrmar(&["fit", "--in", y.to_str().unwrap(), "--P", "4", "--Q", "1", "--out", "m.json"]);
    assert_eq!(out.status.code(), Some(1));
}
