use std::collections::BTreeMap;

use bittune::files::{to_json, ReportFile, SolutionFile, TraceFile};
use bittune::lp::write_lp;
use bittune::pipeline::{parse_threshold, parse_with_requirement, sample_inputs, tune_source, Requirement, TuneOptions};
use bittune::ranges::RangeSpec;
use bittune::Error;
use bittune_core::constraints::Method;
use bittune_core::frontend::parse;
use bittune_core::range::Interval;
use bittune_core::solver::{LinProgram, LinRow};

#[test]
fn lp_text_layout() {
    let mut lp = LinProgram::new(3);
    lp.names = vec!["a".into(), "b".into(), "c".into()];
    lp.primary = vec![1, 2, 0];
    lp.secondary = vec![0, 0, 1];
    lp.upper[1] = Some(7);
    lp.rows.push(LinRow {
        terms: vec![(0, 1), (1, -3)],
        rhs: -2,
    });
    lp.rows.push(LinRow {
        terms: vec![(2, -1)],
        rhs: 0,
    });
    let want = "\
\\ demo
\\ then minimise: c
Minimize
 obj: a + 2 b
Subject To
 c0: a - 3 b >= -2
 c1: - c >= 0
Bounds
 a >= 0
 0 <= b <= 7
 c >= 0
General
 a b c
End
";
    assert_eq!(write_lp(&lp, "demo"), want);
}

#[test]
fn long_lp_rows_wrap() {
    let mut lp = LinProgram::new(20);
    lp.primary = vec![1; 20];
    lp.secondary = vec![1; 20];
    let text = write_lp(&lp, "wide");
    let obj: Vec<&str> = text.lines().skip_while(|l| *l != "Minimize").skip(1).take_while(|l| *l != "Subject To").collect();
    assert_eq!(obj.len(), 3);
    // every line of the secondary objective stays a comment
    let head: Vec<&str> = text.lines().take_while(|l| *l != "Minimize").collect();
    assert_eq!(head.len(), 4);
    assert!(head.iter().all(|l| l.starts_with('\\')));
}

#[test]
fn ranges_toml() {
    let spec = RangeSpec::parse("max_loop_iters = 12\n[inputs]\nx = [1, 2.5]\n[enclosures]\nv = [-4.0, 4]\n").unwrap();
    assert_eq!(spec.config.max_loop_iters, 12);
    assert_eq!(spec.inputs["x"], Interval::new(1.0, 2.5).unwrap());
    assert_eq!(spec.config.enclosures["v"], Interval::new(-4.0, 4.0).unwrap());
    let again = RangeSpec::parse(&spec.to_toml()).unwrap();
    assert_eq!(again.inputs, spec.inputs);
    assert_eq!(again.config.enclosures, spec.config.enclosures);
    assert_eq!(again.config.max_loop_iters, 12);

    for bad in [
        "[inputs]\nx = [2.0, 1.0]\n",
        "[inputs]\nx = [1.0]\n",
        "[inputs]\nx = \"wide\"\n",
        "max_loop_iters = 0\n",
        "other = 3\n",
        "[inputs\n",
    ] {
        assert!(matches!(RangeSpec::parse(bad), Err(Error::RangesFile(_))), "{}", bad);
    }
}

#[test]
fn thresholds() {
    assert_eq!(parse_threshold("1e-6").unwrap(), 6);
    assert_eq!(parse_threshold("0.001").unwrap(), 3);
    assert_eq!(parse_threshold(" 1E-12 ").unwrap(), 12);
    for bad in ["1", "2e-6", "0", "-1e-3", "1e-400", "tiny"] {
        assert!(matches!(parse_threshold(bad), Err(Error::Usage(_))), "{}", bad);
    }
}

#[test]
fn requirements_replace_or_append() {
    let src = "x = 1.5; y = x * x; require_nsb(y, 4); require_nsb(x, 4);";
    let all = parse_with_requirement(src, &Requirement::Threshold { k: 6, var: None }).unwrap();
    assert_eq!(all, parse("x = 1.5; y = x * x; require_nsb(y, 20); require_nsb(x, 20);").unwrap());
    let one = parse_with_requirement(src, &Requirement::Nsb { n: 9, var: "x".into() }).unwrap();
    assert_eq!(one, parse("x = 1.5; y = x * x; require_nsb(y, 4); require_nsb(x, 9);").unwrap());
    let added = parse_with_requirement("x = 1.5; y = x * x;", &Requirement::Nsb { n: 9, var: "y".into() }).unwrap();
    assert_eq!(added, parse("x = 1.5; y = x * x; require_nsb(y, 9);").unwrap());
    assert!(matches!(
        parse_with_requirement("x = 1.5;", &Requirement::Threshold { k: 3, var: None }),
        Err(Error::Usage(_))
    ));
    assert!(matches!(
        parse_with_requirement("x = 1.5;", &Requirement::Nsb { n: 0, var: "x".into() }),
        Err(Error::Usage(_))
    ));
}

#[test]
fn samples_are_seeded_and_inside_their_intervals() {
    let mut inputs = BTreeMap::new();
    inputs.insert("a".to_string(), Interval::new(-1.0, 3.0).unwrap());
    inputs.insert("b".to_string(), Interval::new(2.0, 2.0).unwrap());
    let s1 = sample_inputs(&inputs, 50, 7).unwrap();
    let s2 = sample_inputs(&inputs, 50, 7).unwrap();
    let s3 = sample_inputs(&inputs, 50, 8).unwrap();
    assert_eq!(s1, s2);
    assert_ne!(s1, s3);
    for s in &s1 {
        let a = s["a"].to_f64();
        assert!((-1.0..=3.0).contains(&a));
        assert_eq!(s["b"].to_f64(), 2.0);
    }
    inputs.insert("c".to_string(), Interval::new(0.0, f64::INFINITY).unwrap());
    assert!(sample_inputs(&inputs, 1, 0).is_err());
}

fn opts(method: Method) -> TuneOptions {
    TuneOptions {
        method,
        ranges: RangeSpec::parse("[inputs]\nx = [0.5, 1.5]\n").unwrap(),
        ..Default::default()
    }
}

const PROG: &str = "y = x * x + 0.25; z = y - x; require_nsb(z, 12);";

#[test]
fn solution_files_roundtrip() {
    let t = tune_source(PROG, &opts(Method::Ilp)).unwrap();
    let sol = SolutionFile::new(&t);
    let text = to_json(&sol);
    assert!(text.ends_with('\n'));
    let back = SolutionFile::parse(&text).unwrap();
    assert_eq!(back, sol);
    assert_eq!(back.precisions(), t.precisions);
    assert_eq!(back.input_intervals().unwrap()["x"], Interval::new(0.5, 1.5).unwrap());
    back.check_program(&t.program).unwrap();
    assert!(matches!(
        back.check_program(&parse("y = 1.0;").unwrap()),
        Err(Error::SolutionFile(_))
    ));

    let wrong = text.replacen("\"schema\": 1", "\"schema\": 2", 1);
    assert!(matches!(SolutionFile::parse(&wrong), Err(Error::SolutionFile(_))));
    assert!(matches!(SolutionFile::parse("{}"), Err(Error::SolutionFile(_))));
}

#[test]
fn reports_and_traces() {
    let ilp = tune_source(PROG, &opts(Method::Ilp)).unwrap();
    let r = ReportFile::new(&ilp);
    assert_eq!(r.schema, 1);
    assert_eq!(r.method, "ilp");
    assert_eq!(r.bits_before, 53 * 2);
    assert!(r.bits_after <= r.bits_before);
    assert!(r.pi_steps.is_none());
    let v: serde_json::Value = serde_json::from_str(&to_json(&r)).unwrap();
    assert!(v["counts"]["S"].is_u64());

    let pi = tune_source(PROG, &opts(Method::Pi)).unwrap();
    let trace = pi.trace.as_ref().unwrap();
    let tf = TraceFile::new(&pi, trace);
    assert!(!tf.steps.is_empty());
    assert!(tf.steps.iter().all(|s| s.policy.len() == tf.sites.len()));
    assert_eq!(tf.steps.last().unwrap().objective, pi.solution.objective);
    assert!(ReportFile::new(&pi).pi_steps.is_some());
}
