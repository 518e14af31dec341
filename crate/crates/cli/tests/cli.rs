use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const SYMMETRIC: &str = r#"{"kind":"dense","A":[[-1.0,0.5],[0.5,-2.0]],"Q":[[1.0,0.0],[0.0,1.0]]}"#;
const JORDAN: &str = r#"{"kind":"dense","A":[[-1.0,1.0],[0.0,-1.0]],"Q":[[1.0,0.0],[0.0,1.0]]}"#;
const OBSERVABLE: &str = r#"{"degree":3,"terms":[{"c":1.0,"p":[2,0]},{"c":-0.5,"p":[1,1]},{"c":0.25,"p":[0,3]}]}"#;

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn symou(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_symou")).args(args).output().unwrap()
}

fn report(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("stdout is a JSON report")
}

#[test]
fn symmetric_model_passes_check() {
    let dir = tempfile::tempdir().unwrap();
    let m = write(dir.path(), "m.json", SYMMETRIC);
    let o = symou(&["check", m.to_str().unwrap(), "--expect-symmetric"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&o);
    assert_eq!(r["results"]["is_symmetric"], true);
    assert_eq!(r["passed"], true);
    assert_eq!(r["manifest"]["seed"], 0);
    assert_eq!(r["manifest"]["model_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn nonsymmetric_model_with_expectation_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let m = write(dir.path(), "m.json", JORDAN);
    let o = symou(&["check", m.to_str().unwrap(), "--expect-symmetric"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(report(&o)["results"]["is_symmetric"], false);
    // without the expectation the same model is a valid input
    assert_eq!(symou(&["check", m.to_str().unwrap()]).status.code(), Some(0));
}

#[test]
fn malformed_input_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let m = write(dir.path(), "m.json", "{\"kind\":\"dense\",\"A\":[[1,2]");
    let o = symou(&["check", m.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!o.stderr.is_empty());
    let missing = dir.path().join("missing.json");
    assert_eq!(symou(&["check", missing.to_str().unwrap()]).status.code(), Some(1));
    let bad_shape = write(dir.path(), "s.json", r#"{"kind":"dense","A":[[-1.0]],"Q":[[1.0,0.0],[0.0,1.0]]}"#);
    assert_eq!(symou(&["gramian", bad_shape.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn unstable_drift_is_a_failed_check() {
    let dir = tempfile::tempdir().unwrap();
    let m = write(dir.path(), "m.json", r#"{"kind":"dense","A":[[1.0,0.0],[0.0,-1.0]],"Q":[[1.0,0.0],[0.0,1.0]]}"#);
    assert_eq!(symou(&["check", m.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let m = write(dir.path(), "m.json", SYMMETRIC);
    let out = dir.path().join("out");
    let args = ["simulate", m.to_str().unwrap(), "--samples", "50", "--seed", "7", "--out", out.to_str().unwrap()];
    assert_eq!(symou(&args).status.code(), Some(0));
    let first = (
        std::fs::read(out.join("report.json")).unwrap(),
        std::fs::read(out.join("ensemble.csv")).unwrap(),
    );
    assert_eq!(symou(&args).status.code(), Some(0));
    assert_eq!(std::fs::read(out.join("report.json")).unwrap(), first.0);
    assert_eq!(std::fs::read(out.join("ensemble.csv")).unwrap(), first.1);
}

#[test]
fn ensemble_csv_carries_its_provenance() {
    let dir = tempfile::tempdir().unwrap();
    let m = write(dir.path(), "m.json", SYMMETRIC);
    let o = symou(&["simulate", m.to_str().unwrap(), "--samples", "3", "--steps", "4", "--dt", "0.25", "--seed", "11", "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(&lines[..4], &["# seed=11", "# dt=2.5e-1", "# steps=4", "# samples=3"]);
    assert!(lines[4].starts_with("# model_hash="));
    assert_eq!(lines[5], "sample,step,t,x_1,x_2");
    assert_eq!(lines.len(), 6 + 3 * 5);
}

#[test]
fn eigenvalue_table_has_one_column_per_dimension() {
    let dir = tempfile::tempdir().unwrap();
    let m = write(dir.path(), "m.json", JORDAN);
    let o = symou(&["gramian", m.to_str().unwrap(), "--times", "0.5,1,2", "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,lambda_1,lambda_2"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 3);
    // eigenvalues of Q_t grow with t
    for w in rows.windows(2) {
        assert!(w[1][1] >= w[0][1] && w[1][2] >= w[0][2]);
    }
}

#[test]
fn mehler_methods_agree_and_dump_chaos() {
    let dir = tempfile::tempdir().unwrap();
    let m = write(dir.path(), "m.json", SYMMETRIC);
    let phi = write(dir.path(), "phi.json", OBSERVABLE);
    let out = dir.path().join("out");
    let o = symou(&[
        "mehler", m.to_str().unwrap(), "--observable", phi.to_str().unwrap(), "--point", "0.3,-0.2",
        "--time", "0.7", "--samples", "20000", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&o);
    let s = r["results"]["rt"]["spectral"].as_f64().unwrap();
    let q = r["results"]["rt"]["gauss_hermite"]["value"].as_f64().unwrap();
    assert!((s - q).abs() < 1e-10);
    let chaos = std::fs::read_to_string(out.join("chaos.csv")).unwrap();
    assert!(chaos.starts_with("multi_index,order,eigenvalue,coefficient\n"));
}

#[test]
fn single_method_runs_alone() {
    let dir = tempfile::tempdir().unwrap();
    let m = write(dir.path(), "m.json", JORDAN);
    let phi = write(dir.path(), "phi.json", OBSERVABLE);
    let o = symou(&["mehler", m.to_str().unwrap(), "--observable", phi.to_str().unwrap(), "--method", "gauss-hermite", "--nodes", "12"]);
    assert_eq!(o.status.code(), Some(0));
    let r = report(&o);
    assert!(r["results"]["rt"]["spectral"].is_null());
    assert!(r["results"]["rt"]["monte_carlo"].is_null());
    // spectral evaluation needs a symmetric model
    let o = symou(&["mehler", m.to_str().unwrap(), "--observable", phi.to_str().unwrap(), "--method", "spectral"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn report_nests_every_section() {
    let dir = tempfile::tempdir().unwrap();
    let m = write(dir.path(), "m.json", SYMMETRIC);
    let corpus = write(dir.path(), "c.json", &format!("[{OBSERVABLE}]"));
    let o = symou(&["report", m.to_str().unwrap(), "--corpus", corpus.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&o);
    for key in ["check", "gramian", "gap", "diagnostics", "sobolev"] {
        assert!(r["results"][key].is_object(), "missing {key}");
    }
}

#[test]
fn stdin_model_and_example1() {
    use std::io::Write;
    let mut child = Command::new(env!("CARGO_BIN_EXE_symou"))
        .args(["check", "-"])
        .stdin(std::process::Stdio::piped())
        .stdout(std::process::Stdio::piped())
        .spawn()
        .unwrap();
    child
        .stdin
        .take()
        .unwrap()
        .write_all(br#"{"kind":"diagonal","alpha":[-1.0,-2.0],"q":[1.0,3.0]}"#)
        .unwrap();
    let o = child.wait_with_output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(report(&o)["results"]["is_symmetric"], true);

    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("e1");
    let o = symou(&["example1", "--n", "8", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    // the written model document loads back with the same hash
    let again = symou(&["check", out.join("model.json").to_str().unwrap()]);
    assert_eq!(report(&again)["manifest"]["model_hash"], report(&o)["manifest"]["model_hash"]);
}
