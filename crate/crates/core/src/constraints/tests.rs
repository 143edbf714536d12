use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use super::*;
use crate::frontend::parse;
use crate::range::{analyze_ranges, RangeConfig};
use crate::solver::{kleene_least_fixpoint, solve_lp, Integrality};

fn system(src: &str, method: Method) -> (Program, ConstraintSystem) {
    let p = parse(src).unwrap();
    let r = analyze_ranges(&p, &BTreeMap::new(), &RangeConfig::default()).unwrap();
    let cfg = GenConfig {
        method,
        ..Default::default()
    };
    let s = generate(&p, &r, &cfg).unwrap();
    (p, s)
}

fn rows_at(s: &ConstraintSystem, rule: &str) -> Vec<(Vec<(VarKind, i64)>, i64)> {
    s.constraints
        .iter()
        .filter(|c| c.rule == rule)
        .map(|c| (c.lhs.iter().map(|&(v, a)| (s.vars[v], a)).collect(), c.rhs))
        .collect()
}

fn n(l: Label) -> VarKind {
    VarKind::Nsb(Site::Label(l))
}

fn e(l: Label) -> VarKind {
    VarKind::NsbE(Site::Label(l))
}

const SUM: &str = "x = 5.0; y = 3.0; z = x + y; require_nsb(z,15);";

#[test]
fn addition_rule_uses_ufp_offsets() {
    // labels: 5.0 0, x 1, 3.0 2, y 3, x 4, y 5, + 6, z 7, require 8, seq 9
    let (_, s) = system(SUM, Method::Ilp);
    let add = rows_at(&s, "ADD");
    // read of x: ufp 2, sum ufp 3, carry 1
    assert!(add.contains(&(alloc::vec![(n(4), 1), (n(6), -1)], 2 - 3 + 1)));
    assert!(add.contains(&(alloc::vec![(n(5), 1), (n(6), -1)], 1 - 3 + 1)));
    assert_eq!(rows_at(&s, "REQ"), [(alloc::vec![(n(7), 1)], 15)]);
    assert!(rows_at(&s, "ASSIGN").contains(&(alloc::vec![(n(6), 1), (n(7), -1)], 0)));
    assert!(rows_at(&s, "ID").contains(&(alloc::vec![(n(1), 1), (n(4), -1)], 0)));
}

#[test]
fn worked_example_optimum() {
    let (_, s) = system(SUM, Method::Ilp);
    let lp = s.resolve(&[]);
    let sol = solve_lp(&lp, Integrality::Required).unwrap();
    let v = s.label_values(&sol.values);
    // read of x ≥ sum + ufp(x) - ufp(sum) + carry = 15 + 2 - 3 + 1
    assert_eq!(v[&4], 15);
    // read of y ≥ 15 + 1 - 3 + 1
    assert_eq!(v[&5], 14);
    assert_eq!(v[&7], 15);
    assert_eq!(v[&6], 15);
}

#[test]
fn constants_generate_nothing_in_ilp() {
    let (_, s) = system("x = 0.1#21;", Method::Ilp);
    assert_eq!(s.constraints.len(), 1);
    assert_eq!(s.constraints[0].rule, "ASSIGN");
}

#[test]
fn products_and_math() {
    let (_, s) = system("a = 2.0; b = 3.0; c = a * b; d = sin(c);", Method::Ilp);
    let mult = rows_at(&s, "MULT");
    assert_eq!(mult.len(), 2);
    assert!(mult.iter().all(|(_, rhs)| *rhs == 0));
    let math = rows_at(&s, "MATH");
    assert_eq!(math.len(), 1);
    assert_eq!(math[0].1, 2);
}

#[test]
fn ilp_rows_have_unit_coefficients() {
    let src = "a = 1.5; b = 0.25; while (a < 10.0) { c = a * b + sqrt(a) - b / a; a = a + c; } require_nsb(a, 12);";
    let (_, s) = system(src, Method::Ilp);
    assert!(s.xi_sites.is_empty());
    for c in &s.constraints {
        assert!(c.xi.is_none());
        assert!(c.lhs.iter().all(|(_, a)| *a == 1 || *a == -1), "{:?}", c);
    }
}

#[test]
fn pi_rules() {
    let (_, s) = system("a = 2.0; b = 3.0; c = a * b; require_nsb(c, 10);", Method::Pi);
    // 2.0 0, a 1, 3.0 2, b 3, a 4, b 5, * 6, c 7, req 8, seq 9
    assert_eq!(
        rows_at(&s, "CONST'"),
        [(alloc::vec![(e(0), 1)], 0), (alloc::vec![(e(0), -1)], 0), (alloc::vec![(e(2), 1)], 0), (alloc::vec![(e(2), -1)], 0)]
    );
    let mut mult = rows_at(&s, "MULT'");
    mult.iter_mut().for_each(|(t, _)| t.sort());
    assert!(mult.contains(&({
        let mut t = alloc::vec![(n(4), -1), (e(4), -1), (e(5), -1), (e(6), 1)];
        t.sort();
        t
    }, -2)));
    assert!(rows_at(&s, "ASSIGN'").contains(&(alloc::vec![(e(6), 1), (e(7), -1)], 0)));
    assert!(rows_at(&s, "ID'").contains(&(alloc::vec![(e(1), 1), (e(4), -1)], 0)));
    // requirements add no error-bit rows
    assert_eq!(rows_at(&s, "REQ").len(), 1);
    assert_eq!(s.xi_sites.len(), 1);
    assert_eq!(s.xi_sites[0].ops, (4, 5));
}

#[test]
fn conditional_join_ties_both_branches() {
    let src = "x = 1.0; if (x < 2.0) { y = x + 1.0; } else { y = x * 2.0; } require_nsb(y, 8);";
    let (p, s) = system(src, Method::Pi);
    let kinds = p.node_kinds();
    let j = kinds.iter().position(|k| *k == NodeKind::If).unwrap();
    let assigns: Vec<Label> = kinds
        .iter()
        .enumerate()
        .filter(|(_, k)| **k == NodeKind::Assign("y".into()))
        .map(|(l, _)| l)
        .collect();
    for l in assigns {
        assert!(rows_at(&s, "COND").contains(&(alloc::vec![(n(l), 1), (n(j), -1)], 0)));
        assert!(rows_at(&s, "COND").contains(&(alloc::vec![(e(l), 1), (e(j), -1)], 0)));
    }
    assert_eq!(rows_at(&s, "REQ"), [(alloc::vec![(n(j), 1)], 8)]);
}

#[test]
fn zero_values_are_fixed_and_dropped() {
    let (_, s) = system("z = 0.0; w = z * 3.0; v = w + 1.0; require_nsb(v, 5);", Method::Ilp);
    let z = s.nsb(1).unwrap();
    assert_eq!(s.upper[z], Some(0));
    assert!(s.warnings.iter().any(|w| matches!(w, GenWarning::DroppedZero { .. })));
    let sol = solve_lp(&s.resolve(&[]), Integrality::Required).unwrap();
    assert_eq!(sol.values[z], 0);
}

#[test]
fn all_carry_policy_matches_pessimistic_system() {
    let src = "a = 1.5; b = 0.25; c = a * b + a; d = c - b / a; require_nsb(d, 16);";
    let (_, ilp) = system(src, Method::Ilp);
    let (_, pi) = system(src, Method::Pi);
    let s1 = solve_lp(&ilp.resolve(&[]), Integrality::Required).unwrap();
    let s2 = solve_lp(&pi.resolve(&pi.pessimistic_policy()), Integrality::BranchAndBound).unwrap();
    assert_eq!(ilp.label_values(&s1.values), pi.label_values(&s2.values));
    assert!(pi.holds(&s2.values));
}

#[test]
fn kleene_agrees_on_loops() {
    let src = "h = 0.1; y = 1.0; while (y < 3.0) { y = y + h * y; } require_nsb(y, 20);";
    let (_, s) = system(src, Method::Ilp);
    let lp = s.resolve(&[]);
    let a = solve_lp(&lp, Integrality::Required).unwrap();
    let b = kleene_least_fixpoint(&lp).unwrap();
    assert_eq!(a.values, b.values);
}

#[test]
fn fixpoint_loop_rule_creates_cycles() {
    let src = "x = 1.0; while (x < 4.0) { x = x + 0.5; } require_nsb(x, 10);";
    let p = parse(src).unwrap();
    let r = analyze_ranges(&p, &BTreeMap::new(), &RangeConfig::default()).unwrap();
    let cfg = GenConfig {
        loop_rule: LoopRule::Fixpoint,
        ..Default::default()
    };
    let s = generate(&p, &r, &cfg).unwrap();
    // read ≥ sum + carry ≥ assignment ≥ join ≥ read: a positive cycle
    assert!(solve_lp(&s.resolve(&[]), Integrality::Required).is_err());
    let s = generate(&p, &r, &GenConfig::default()).unwrap();
    assert!(solve_lp(&s.resolve(&[]), Integrality::Required).is_ok());
}

#[test]
fn site_term_matches_branch_values() {
    let (_, s) = system("a = 2.0; b = 3.0; c = a + b;", Method::Pi);
    let site = &s.xi_sites[0];
    let t = site.term();
    let mut x = alloc::vec![0i64; s.vars.len()];
    for seed in 0..50i64 {
        for (i, v) in x.iter_mut().enumerate() {
            *v = (seed * 7 + i as i64 * 13) % 23;
        }
        assert_eq!(t.eval(&x), site.eval(&x));
        assert!((0..=1).contains(&site.eval(&x)));
    }
}
