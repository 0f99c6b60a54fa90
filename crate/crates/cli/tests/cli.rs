use std::fs;
use std::process::Command;

fn mdsat(args: &[&str]) -> std::process::Output {
    let out = Command::new(env!("CARGO_BIN_EXE_mdsat")).args(args).output().unwrap();
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

#[test]
fn generate_then_solve() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    mdsat(&["generate", "--n", "8", "--count", "2", "--seed", "5", "--out-dir", d]);
    let cnf = dir.path().join("n8_0000.cnf");
    let side: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("n8_0000.json")).unwrap()).unwrap();
    assert_eq!(side["n_s"], 1);
    assert_eq!(side["m"], 34);
    let cnf = cnf.to_str().unwrap();

    let out = mdsat(&["solve-classical", "--cnf", cnf, "--runs", "4"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 5);
    assert_eq!(lines[1].split(',').next_back().unwrap(), side["solutions"][0].as_str().unwrap());

    let out = mdsat(&["solve-quantum", "--cnf", cnf, "--schedule", "cubic:0.7pi/2,8"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["report"]["most_likely"][0], side["solutions"][0]);

    let out = mdsat(&["trace", "--cnf", cnf, "--schedule", "fixed:1.0,3"]);
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 5);

    let out = mdsat(&["gap", "--cnf", cnf, "--theta-grid", "0.6,pi/2", "--mode", "dense"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().skip(1).all(|l| l.contains(",dense,1,1,")));
}

#[test]
fn batch_commands_write_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep");
    mdsat(&["sweep", "--sizes", "6", "--instances", "2", "--increments", "2,4", "--out", out.to_str().unwrap()]);
    assert!(out.join("manifest.json").exists());
    assert!(out.join("sweep.csv").exists());

    let plan = dir.path().join("p.json");
    fs::write(&plan, r#"{"kind":"gap-suite","sizes":[6],"instances_per_size":2,"thetas":[1.0]}"#).unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    mdsat(&["run-plan", plan.to_str().unwrap(), "--out", a.to_str().unwrap(), "--threads", "1"]);
    mdsat(&["run-plan", plan.to_str().unwrap(), "--out", b.to_str().unwrap(), "--threads", "2"]);
    assert_eq!(fs::read(a.join("gap_suite.csv")).unwrap(), fs::read(b.join("gap_suite.csv")).unwrap());
}

#[test]
fn bad_input_fails() {
    let out = Command::new(env!("CARGO_BIN_EXE_mdsat")).args(["trace", "--cnf", "/nonexistent.cnf", "--schedule", "fixed:1,2"]).output().unwrap();
    assert!(!out.status.success());
    let out = Command::new(env!("CARGO_BIN_EXE_mdsat")).args(["compare", "--sizes", "6"]).output().unwrap();
    assert!(!out.status.success());
}
