use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;
use std::process::{Command, Output};

use horocm::sphere_grid::io::{read_fields, write_fields};
use horocm::SphereGrid;
use serde_json::Value;

fn horocm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_horocm")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("process exited by signal")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.display().to_string()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn phi_values(dir: &Path, res: usize, n: usize) -> Vec<f64> {
    let data = read_fields(BufReader::new(File::open(dir.join("solution.hcm")).unwrap())).unwrap();
    data.check_grid(&SphereGrid::build(n, res).unwrap()).unwrap();
    data.field("phi").unwrap().into_values()
}

#[test]
fn constant_solve_matches_closed_form_and_verifies() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "run.json",
        r#"{"n": 2, "k": 1, "p": 0.5, "resolution": 16, "f": "constant:0.8", "out": "out"}"#,
    );
    let out = dir.path().join("out");

    let c = horocm(&["constant", "--gamma", "0.8", "--p", "0.5", "--k", "1", "--n", "2"]);
    assert_eq!(code(&c), 0);
    let report: Value = serde_json::from_slice(&c.stdout).unwrap();
    let expected = report["constant"].as_f64().unwrap();
    let (lo, hi) = (report["c0_lower"].as_f64().unwrap(), report["c0_upper"].as_f64().unwrap());
    assert!(lo <= expected && expected <= hi);

    let s = horocm(&["solve", "--config", &cfg]);
    assert_eq!(code(&s), 0, "{}", String::from_utf8_lossy(&s.stderr));
    for v in phi_values(&out, 16, 2) {
        assert!((v - expected).abs() < 1e-10, "{v} vs {expected}");
    }
    let rep = json(&out.join("solve_report.json"));
    assert_eq!(rep["converged"], Value::Bool(true));
    assert!(out.join("certificate.json").exists());

    let v = horocm(&["verify", "--config", &cfg]);
    assert_eq!(code(&v), 0, "{}", String::from_utf8_lossy(&v.stderr));
    assert_eq!(json(&out.join("verify_certificate.json"))["pass"], Value::Bool(true));
}

#[test]
fn verify_rejects_tampered_and_mismatched_solutions() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.json", r#"{"resolution": 16, "f": "constant:1", "out": "out"}"#);
    let out = dir.path().join("out");
    assert_eq!(code(&horocm(&["solve", "--config", &cfg])), 0);

    let solution = out.join("solution.hcm");
    let data = read_fields(BufReader::new(File::open(&solution).unwrap())).unwrap();
    let grid = SphereGrid::build(2, 16).unwrap();
    let phi = data.field("phi").unwrap().map(|v| 1.01 * v);
    let f = data.field("f").unwrap();
    let tampered = dir.path().join("tampered.hcm");
    let mut w = BufWriter::new(File::create(&tampered).unwrap());
    write_fields(&mut w, &grid, &[("phi", &phi), ("f", &f)]).unwrap();
    w.flush().unwrap();
    drop(w);

    let bad = write_config(
        dir.path(),
        "tampered.json",
        r#"{"resolution": 16, "f": "constant:1", "solution": "tampered.hcm", "out": "out"}"#,
    );
    let v = horocm(&["verify", "--config", &bad]);
    assert_eq!(code(&v), 2);
    assert_eq!(json(&out.join("verify_certificate.json"))["pass"], Value::Bool(false));

    let wrong_n = write_config(
        dir.path(),
        "wrong_n.json",
        r#"{"n": 3, "k": 1, "resolution": 16, "f": "constant:1", "out": "out"}"#,
    );
    assert_eq!(code(&horocm(&["verify", "--config", &wrong_n])), 1);
    assert_eq!(code(&horocm(&["verify", "--config", &cfg, "--resolution", "12"])), 1);
}

#[test]
fn check_f_reports_failure_and_success() {
    let dir = tempfile::tempdir().unwrap();
    let failing = write_config(dir.path(), "f.json", r#"{"p": 2.0, "f": "constant:2", "resolution": 8}"#);
    let out = dir.path().join("fail");
    let r = horocm(&["check-f", "--config", &failing, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&r), 2);
    assert_eq!(json(&out.join("assumption_report.json"))["pass"], Value::Bool(false));

    let passing = write_config(dir.path(), "g.json", r#"{"f": "admissible:2,0.3,2", "resolution": 16}"#);
    let out = dir.path().join("pass");
    let r = horocm(&["check-f", "--config", &passing, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stdout));
}

#[test]
fn errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.json");
    assert_eq!(code(&horocm(&["solve", "--config", missing.to_str().unwrap()])), 1);

    let bad_k = write_config(dir.path(), "k.json", r#"{"n": 2, "k": 2}"#);
    assert_eq!(code(&horocm(&["solve", "--config", &bad_k])), 1);

    let unknown = write_config(dir.path(), "u.json", r#"{"bogus": 1}"#);
    assert_eq!(code(&horocm(&["solve", "--config", &unknown])), 1);

    let no_solution = write_config(dir.path(), "v.json", r#"{"out": "empty"}"#);
    assert_eq!(code(&horocm(&["verify", "--config", &no_solution])), 1);

    assert_eq!(code(&horocm(&["solve", "--resolution"])), 1);
    assert_eq!(code(&horocm(&["--help"])), 0);
}

#[test]
fn step_underflow_writes_last_good_state() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "run.json",
        r#"{
            "f": "manufactured:1.5,0.05",
            "resolution": 16,
            "out": "out",
            "homotopy": {"initial_step": 1.0, "min_step": 0.5, "max_newton_iters": 1, "newton_tol": 1e-14}
        }"#,
    );
    let out = dir.path().join("out");
    let r = horocm(&["solve", "--config", &cfg]);
    assert_eq!(code(&r), 3, "{}", String::from_utf8_lossy(&r.stderr));
    assert!(out.join("last_good.hcm").exists());
    let failure = json(&out.join("failure.json"));
    assert_eq!(failure["last_good_t"].as_f64(), Some(0.0));
    assert!(!out.join("solution.hcm").exists());
}

#[test]
fn export_writes_consistent_tables_and_mesh() {
    let dir = tempfile::tempdir().unwrap();
    let res = 12;
    let cfg = write_config(
        dir.path(),
        "run.json",
        &format!(r#"{{"f": "manufactured:1.5,0.05", "resolution": {res}, "out": "out"}}"#),
    );
    let out = dir.path().join("out");
    assert_eq!(code(&horocm(&["solve", "--config", &cfg])), 0);
    let e = horocm(&["export", "--config", &cfg]);
    assert_eq!(code(&e), 0, "{}", String::from_utf8_lossy(&e.stderr));

    let nodes = SphereGrid::build(2, res).unwrap().len();
    let csv = fs::read_to_string(out.join("nodes.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("node,x0,x1,x2,phi,radius_1,radius_2,residual"));
    assert_eq!(lines.count(), nodes);

    let conf = fs::read_to_string(out.join("conformal.csv")).unwrap();
    let mut lines = conf.lines();
    assert_eq!(lines.next(), Some("node,x0,x1,x2,lambda_1,lambda_2,identity_gap"));
    for line in lines.by_ref().take(nodes) {
        let gap: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
        assert!(gap < 1e-10, "{gap}");
    }

    let obj = fs::read_to_string(out.join("mesh.obj")).unwrap();
    let vertices: Vec<[f64; 3]> = obj
        .lines()
        .filter_map(|l| l.strip_prefix("v "))
        .map(|l| {
            let v: Vec<f64> = l.split_whitespace().map(|s| s.parse().unwrap()).collect();
            [v[0], v[1], v[2]]
        })
        .collect();
    let faces = obj.lines().filter(|l| l.starts_with("f ")).count();
    assert_eq!(vertices.len(), nodes);
    assert_eq!(faces, 2 * nodes - 4);
    assert!(vertices.iter().all(|v| v.iter().map(|c| c * c).sum::<f64>() < 1.0));
}

#[test]
fn obj_export_refuses_three_sphere() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.json", r#"{"n": 3, "k": 1, "resolution": 8, "out": "out"}"#);
    assert_eq!(code(&horocm(&["solve", "--config", &cfg])), 0);
    assert_eq!(code(&horocm(&["export", "--config", &cfg, "--format", "obj"])), 1);
    assert_eq!(code(&horocm(&["export", "--config", &cfg, "--format", "csv"])), 0);
}

#[test]
fn reports_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let body = r#"{"f": "admissible:2,0.3,2", "resolution": 12, "out": "OUT"}"#;
    let mut reports = Vec::new();
    for name in ["a", "b"] {
        let cfg = write_config(dir.path(), &format!("{name}.json"), &body.replace("OUT", name));
        assert_eq!(code(&horocm(&["solve", "--config", &cfg])), 0);
        let out = dir.path().join(name);
        reports.push((
            fs::read(out.join("solve_report.json")).unwrap(),
            fs::read(out.join("solution.hcm")).unwrap(),
        ));
    }
    assert_eq!(reports[0], reports[1]);

    let a = horocm(&["selftest", "--seed", "7", "--cases", "200"]);
    let b = horocm(&["selftest", "--seed", "7", "--cases", "200"]);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
}
