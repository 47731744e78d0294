use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn qtda(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qtda")).args(args).output().unwrap()
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

const C4: &str = "n 4\n0 1\n1 2\n2 3\n3 0\n";
const SQUARE: &str = "0,0\n1,0\n1,1\n0,1\n";

#[test]
fn betti_of_a_square() {
    let dir = tempfile::tempdir().unwrap();
    let edges = write(dir.path(), "c4.txt", C4);
    let v = stdout_json(&qtda(&["betti", "--edges", &edges]));
    let betti: Vec<u64> = v.as_array().unwrap().iter().map(|r| r["betti"].as_u64().unwrap()).collect();
    assert_eq!(betti, [1, 1]);
}

#[test]
fn fixed_seed_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let edges = write(dir.path(), "c4.txt", C4);
    let args = ["lgz", "--edges", &edges, "--k", "1", "--seed", "11"];
    let a = qtda(&args);
    let b = qtda(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let v: Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v["M"], 738);
    assert!((v["value"].as_f64().unwrap() - 0.25).abs() < 0.05);
}

#[test]
fn sample_stream_file() {
    let dir = tempfile::tempdir().unwrap();
    let edges = write(dir.path(), "c4.txt", C4);
    let out = qtda(&["swes", "--edges", &edges, "--k", "1"]);
    assert_eq!(out.status.code(), Some(2));

    let matrix = write(dir.path(), "m.txt", "dim 3 nnz 3\n0 0 0.25\n1 1 0.5\n2 2 1.0\n");
    let stream = dir.path().join("stream.csv");
    let out = qtda(&[
        "swes",
        "--matrix",
        &matrix,
        "--samples",
        "50",
        "--stream",
        stream.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(stream).unwrap();
    assert_eq!(text.lines().next(), Some("iteration,raw,value"));
    assert_eq!(text.lines().count(), 51);
}

#[test]
fn barcode_csv() {
    let dir = tempfile::tempdir().unwrap();
    let points = write(dir.path(), "square.csv", SQUARE);
    let out = qtda(&["barcode", "--points", &points, "--scales", "0.9,1.0,1.5"]);
    assert!(out.status.success());
    assert_eq!(
        String::from_utf8(out.stdout).unwrap(),
        "epsilon,beta_0,beta_1\n0.9,4,0\n1.0,1,1\n1.5,1,0\n"
    );
}

#[test]
fn resource_anchors() {
    let v = stdout_json(&qtda(&["resources", "--n", "80", "--r", "9", "--t", "30", "--mode", "sparse_access"]));
    assert_eq!(v["qubit_count"], 200);
    let v = stdout_json(&qtda(&["resources", "--n", "80", "--mode", "single_qubit_register"]));
    assert_eq!(v["qubit_count"], 81);
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let edges = write(dir.path(), "c4.txt", C4);
    let config = write(
        dir.path(),
        "run.toml",
        &format!("command = \"lgz\"\nedges = {edges:?}\nk = 1\nseed = 3\nsamples = 100\n"),
    );
    let from_file = stdout_json(&qtda(&["--config", &config]));
    assert_eq!(from_file["seed"], 3);
    assert_eq!(from_file["M"], 100);
    let overridden = stdout_json(&qtda(&["--config", &config, "--seed", "4"]));
    assert_eq!(overridden["seed"], 4);
    assert_eq!(overridden["M"], 100);
}

#[test]
fn unknown_config_key_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "bad.toml", "command = \"betti\"\nsead = 3\n");
    let out = qtda(&["--config", &config]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn validation_errors_exit_2() {
    let out = qtda(&["llsd", "--epsilon", "1.5"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error: "));
    let dir = tempfile::tempdir().unwrap();
    let edges = write(dir.path(), "dup.txt", "n 3\n0 1\n1 0\n");
    assert_eq!(qtda(&["betti", "--edges", &edges]).status.code(), Some(2));
}

#[test]
fn infeasible_precision_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let edges = write(dir.path(), "c4.txt", C4);
    let out = qtda(&["llsd", "--edges", &edges, "--k", "1", "--b", "0", "--delta", "1e-30"]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn human_output() {
    let dir = tempfile::tempdir().unwrap();
    let points = write(dir.path(), "square.csv", SQUARE);
    let out = qtda(&["barcode", "--points", &points, "--scales", "1.0", "--human"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().next().unwrap().contains("beta_0"));
    assert!(!text.contains(','));
}
