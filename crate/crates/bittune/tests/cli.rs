use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_bittune");

fn testdata(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../testdata").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

const STRAIGHT: &str = "x = 1.7; y = x * x + 0.3; z = sqrt(y) - x / 3.0; require_nsb(z, 20);";

#[test]
fn pendulum_ilp_writes_every_file() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let (sol, rep, lp, ann) = (d.join("s.json"), d.join("r.json"), d.join("p.lp"), d.join("a.imp"));
    let pend = testdata("pendulum.imp");
    let ufp = testdata("pendulum_ufp.tsv");
    let o = run(&[
        "tune", s(&pend), "--phi", "9", "--ufp-table", s(&ufp),
        "--dump-solution", s(&sol), "--report", s(&rep), "--emit-lp", s(&lp), "--emit-annotated", s(&ann),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).is_empty());
    let text = std::fs::read_to_string(&ann).unwrap();
    assert!(text.contains("y1new|20| = y1|21| +|20| y2|22| *|22| h|22|;"), "{}", text);

    let r = json(&rep);
    assert_eq!(r["schema"], 1);
    assert_eq!(r["method"], "ilp");
    assert_eq!(r["bits_before"], 689);
    assert_eq!(r["bits_after"], 274);
    let v = json(&sol);
    assert_eq!(v["schema"], 1);
    assert_eq!(v["objective"], r["objective"]);
    let lp = std::fs::read_to_string(&lp).unwrap();
    assert!(lp.starts_with("\\ "));
    for section in ["Minimize", "Subject To", "Bounds", "General", "End"] {
        assert!(lp.lines().any(|l| l == section), "{}", section);
    }
}

#[test]
fn pendulum_pi_writes_a_trace() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("t.json");
    let o = run(&[
        "tune", s(&testdata("pendulum.imp")), "--phi", "9", "--ufp-table", s(&testdata("pendulum_ufp.tsv")),
        "--method", "pi", "--trace", s(&trace),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("y1new|"));
    let t = json(&trace);
    assert_eq!(t["schema"], 1);
    assert_eq!(t["hit_cap"], false);
    assert_eq!(t["strictly_decreasing"], true);
    let steps = t["steps"].as_array().unwrap();
    assert!(!steps.is_empty());
    let sites = t["sites"].as_array().unwrap().len();
    assert!(steps.iter().all(|st| st["policy"].as_str().unwrap().len() == sites));
}

#[test]
fn unbounded_loops_need_ranges() {
    let o = run(&["tune", s(&testdata("pendulum.imp"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("unbounded range"), "{}", stderr(&o));
}

#[test]
fn warnings_are_not_repeated() {
    let o = run(&["tune", s(&testdata("pendulum.imp")), "--ufp-table", s(&testdata("pendulum_ufp.tsv"))]);
    assert!(o.status.success());
    let err = stderr(&o);
    let lines: Vec<&str> = err.lines().filter(|l| l.starts_with("warning:")).collect();
    let mut unique = lines.clone();
    unique.sort();
    unique.dedup();
    assert_eq!(lines.len(), unique.len(), "{}", err);
}

#[test]
fn tune_then_validate() {
    let dir = tempfile::tempdir().unwrap();
    let prog = write(dir.path(), "a.imp", STRAIGHT);
    let sol = dir.path().join("s.json");
    let rep = dir.path().join("v.json");
    let o = run(&["tune", s(&prog), "--dump-solution", s(&sol)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = run(&["validate", s(&prog), "--solution", s(&sol), "--samples", "5", "--report", s(&rep)]);
    assert!(o.status.success(), "{}{}", stdout(&o), stderr(&o));
    assert!(stdout(&o).contains("PASS"));
    let v = json(&rep);
    assert_eq!(v["schema"], 1);
    assert_eq!(v["pass"], true);
    assert_eq!(v["samples"], 5);
    assert_eq!(v["seed"], 42);
}

#[test]
fn validate_rejects_a_solution_for_another_program() {
    let dir = tempfile::tempdir().unwrap();
    let prog = write(dir.path(), "a.imp", STRAIGHT);
    let other = write(dir.path(), "b.imp", "x = 2.0; y = x * x; require_nsb(y, 8);");
    let sol = dir.path().join("s.json");
    assert!(run(&["tune", s(&prog), "--dump-solution", s(&sol)]).status.success());
    let o = run(&["validate", s(&other), "--solution", s(&sol)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("different program"), "{}", stderr(&o));
}

#[test]
fn nsb_override_on_a_variable() {
    let dir = tempfile::tempdir().unwrap();
    let prog = write(dir.path(), "a.imp", "x = 1.5; y = x + 0.25;");
    let o = run(&["tune", s(&prog), "--nsb", "12", "--var", "y"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("y|12|"), "{}", stdout(&o));
    // --nsb without --var is a usage error
    assert_eq!(run(&["tune", s(&prog), "--nsb", "12"]).status.code(), Some(2));
    // --var alone says nothing
    let o = run(&["tune", s(&prog), "--var", "y"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--var"));
}

#[test]
fn threshold_sets_the_requirement() {
    let dir = tempfile::tempdir().unwrap();
    let prog = write(dir.path(), "a.imp", "x = 1.5; y = x + 0.25; require_nsb(y, 4);");
    // 10^-6 needs 20 bits
    let o = run(&["tune", s(&prog), "--threshold", "1e-6"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("y|20|"), "{}", stdout(&o));
    let o = run(&["tune", s(&prog), "--threshold", "0.001x"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn ranges_file_supplies_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let prog = write(dir.path(), "a.imp", "y = x * 2.0 + 1.0; require_nsb(y, 10);");
    let good = write(dir.path(), "r.toml", "[inputs]\nx = [1, 2.5]\n");
    let sol = dir.path().join("s.json");
    let o = run(&["tune", s(&prog), "--ranges", s(&good), "--dump-solution", s(&sol)]);
    assert!(o.status.success(), "{}", stderr(&o));
    // the inputs are sampled from the intervals recorded in the solution
    let rep = dir.path().join("v.json");
    let o = run(&["validate", s(&prog), "--solution", s(&sol), "--samples", "20", "--report", s(&rep)]);
    assert!(matches!(o.status.code(), Some(0 | 1)), "{}", stderr(&o));
    let v = json(&rep);
    assert_eq!(v["samples"], 20);
    assert_eq!(v["diverged"], 0);

    let bad = write(dir.path(), "bad.toml", "[inputs]\nx = [3.0, 1.0]\n");
    let o = run(&["tune", s(&prog), "--ranges", s(&bad)]);
    assert_eq!(o.status.code(), Some(2));
    let unknown = write(dir.path(), "u.toml", "bogus = 1\n");
    let o = run(&["tune", s(&prog), "--ranges", s(&unknown)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("bogus"));
}

#[test]
fn missing_and_malformed_programs() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["tune", s(&dir.path().join("nope.imp"))]);
    assert_eq!(o.status.code(), Some(2));
    let bad = write(dir.path(), "bad.imp", "x = ;");
    let o = run(&["tune", s(&bad)]);
    assert_eq!(o.status.code(), Some(2));
}
