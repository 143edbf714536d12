//! The last-assignment environment and related queries.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use super::ast::*;

/// Where a variable's current value was produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Site {
    /// An assignment or a join label.
    Label(Label),
    /// The initial value of the `i`-th program input.
    Input(usize),
}

/// `ϱ`: identifier to the site of its most recent assignment.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Env {
    map: BTreeMap<String, Site>,
}

impl Env {
    pub fn new() -> Env {
        Env::default()
    }

    /// Initial environment binding each input to its own site.
    pub fn with_inputs(inputs: &[String]) -> Env {
        let mut e = Env::new();
        for (i, x) in inputs.iter().enumerate() {
            e.bind(x, Site::Input(i));
        }
        e
    }

    pub fn get(&self, x: &str) -> Option<Site> {
        self.map.get(x).copied()
    }

    pub fn bind(&mut self, x: &str, s: Site) {
        self.map.insert(String::from(x), s);
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Site)> {
        self.map.iter()
    }

    pub fn names(&self) -> impl Iterator<Item = &String> {
        self.map.keys()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// Every variable known to any of `envs` now lives at `label`.
    pub fn joined(label: Label, envs: &[&Env]) -> Env {
        let mut out = Env::new();
        for e in envs {
            for x in e.names() {
                out.bind(x, Site::Label(label));
            }
        }
        out
    }
}

/// Environment after running `c` from `rho`, following the command rules:
/// assignments rebind, `if`/`while` rebind every variable to their label.
pub fn env_after(c: &Cmd, rho: &Env) -> Env {
    match &c.kind {
        CmdKind::Seq(cs) => cs.iter().fold(rho.clone(), |r, c| env_after(c, &r)),
        CmdKind::Assign { var, .. } => {
            let mut r = rho.clone();
            r.bind(var, Site::Label(c.label));
            r
        }
        CmdKind::While { body, .. } => {
            let inner = env_after(body, rho);
            Env::joined(c.label, &[rho, &inner])
        }
        CmdKind::If {
            then_branch,
            else_branch,
            ..
        } => {
            let a = env_after(then_branch, rho);
            let b = match else_branch {
                Some(e) => env_after(e, rho),
                None => rho.clone(),
            };
            Env::joined(c.label, &[&a, &b])
        }
        CmdKind::Require { .. } => rho.clone(),
    }
}

/// Environment at the end of the program.
pub fn final_env(p: &Program, inputs: &[String]) -> Env {
    let start = Env::with_inputs(inputs);
    match &p.body {
        Some(b) => env_after(b, &start),
        None => start,
    }
}

/// A constant occurrence: `Const(e)` of an expression.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConstOcc<'a> {
    pub value: &'a Decimal,
    pub prec: u32,
    pub label: Label,
}

/// The constants occurring in `e`, left to right.
pub fn const_set(e: &Expr) -> Vec<ConstOcc<'_>> {
    let mut out = Vec::new();
    e.walk(&mut |n| {
        if let ExprKind::Const { value, prec, .. } = &n.kind {
            out.push(ConstOcc {
                value,
                prec: *prec,
                label: n.label,
            });
        }
    });
    // pre-order already yields left-to-right order for leaves
    out
}

/// A lexical occurrence of a token that carries a label: identifiers
/// (assignment targets and reads), operators and function names.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Occurrence {
    pub token: String,
    pub label: Label,
}

/// All labelled tokens in source order.
pub fn occurrences(p: &Program) -> Vec<Occurrence> {
    let mut out = Vec::new();
    if let Some(b) = &p.body {
        occ_cmd(b, &mut out);
    }
    out
}

fn occ_expr(e: &Expr, out: &mut Vec<Occurrence>) {
    let mut push = |t: &str, l| {
        out.push(Occurrence {
            token: String::from(t),
            label: l,
        })
    };
    match &e.kind {
        ExprKind::Const { value, .. } => push(&value.text, e.label),
        ExprKind::Var(x) => push(x, e.label),
        ExprKind::Bin(op, a, b) => {
            occ_expr(a, out);
            out.push(Occurrence {
                token: String::from(op.symbol()),
                label: e.label,
            });
            occ_expr(b, out);
        }
        ExprKind::Math(f, a) => {
            push(f.name(), e.label);
            occ_expr(a, out);
        }
        ExprKind::Sqrt(a) => {
            push("sqrt", e.label);
            occ_expr(a, out);
        }
    }
}

fn occ_cond(c: &Cond, out: &mut Vec<Occurrence>) {
    match &c.kind {
        CondKind::Cmp(_, a, b) => {
            occ_expr(a, out);
            occ_expr(b, out);
        }
        CondKind::And(a, b) | CondKind::Or(a, b) => {
            occ_cond(a, out);
            occ_cond(b, out);
        }
        CondKind::Not(a) => occ_cond(a, out),
    }
}

fn occ_cmd(c: &Cmd, out: &mut Vec<Occurrence>) {
    match &c.kind {
        CmdKind::Seq(cs) => cs.iter().for_each(|c| occ_cmd(c, out)),
        CmdKind::Assign { var, expr } => {
            out.push(Occurrence {
                token: var.clone(),
                label: c.label,
            });
            occ_expr(expr, out);
        }
        CmdKind::While { cond, body } => {
            occ_cond(cond, out);
            occ_cmd(body, out);
        }
        CmdKind::If {
            cond,
            then_branch,
            else_branch,
        } => {
            occ_cond(cond, out);
            occ_cmd(then_branch, out);
            if let Some(e) = else_branch {
                occ_cmd(e, out);
            }
        }
        CmdKind::Require { .. } => {}
    }
}

/// Label of the `k`-th (1-based) occurrence of `token`.
pub fn find_occurrence(p: &Program, token: &str, k: usize) -> Option<Label> {
    occurrences(p)
        .into_iter()
        .filter(|o| o.token == token)
        .nth(k.checked_sub(1)?)
        .map(|o| o.label)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse;

    #[test]
    fn second_assignment_wins() {
        let p = parse("x = 1.0; x = 2.0;").unwrap();
        let env = final_env(&p, &[]);
        // labels: 1.0=0, x=1, 2.0=2, x=3, seq=4
        assert_eq!(env.get("x"), Some(Site::Label(3)));
    }

    #[test]
    fn loop_rebinds_to_join() {
        let p = parse("x = 1.0; while (x < 2.0) { x = x + 1.0; }").unwrap();
        let env = final_env(&p, &[]);
        let w = p.node_kinds().iter().position(|k| *k == NodeKind::While).unwrap();
        assert_eq!(env.get("x"), Some(Site::Label(w)));
    }

    #[test]
    fn const_set_examples() {
        let p = parse("r = 18.0 * x + 12.0 * y + z;").unwrap();
        let CmdKind::Assign { expr, .. } = &p.body.as_ref().unwrap().kind else {
            panic!()
        };
        let cs: Vec<_> = const_set(expr).iter().map(|c| c.value.text.clone()).collect();
        assert_eq!(cs, ["18.0", "12.0"]);
        let p = parse("r = x;").unwrap();
        let CmdKind::Assign { expr, .. } = &p.body.as_ref().unwrap().kind else {
            panic!()
        };
        assert!(const_set(expr).is_empty());
        let p = parse("r = 0.1#21;").unwrap();
        let CmdKind::Assign { expr, .. } = &p.body.as_ref().unwrap().kind else {
            panic!()
        };
        let cs = const_set(expr);
        assert_eq!(cs.len(), 1);
        assert_eq!(cs[0].prec, 21);
        assert_eq!(cs[0].label, expr.label);
    }

    #[test]
    fn occurrence_lookup() {
        let p = parse("y = x * h; x = y + h;").unwrap();
        // y@1 is the first assignment, h@2 the read in the second statement
        assert_eq!(find_occurrence(&p, "y", 1), Some(3));
        assert_eq!(find_occurrence(&p, "h", 2), Some(5));
        assert_eq!(find_occurrence(&p, "+", 1), Some(6));
        assert_eq!(find_occurrence(&p, "y", 3), None);
        assert_eq!(find_occurrence(&p, "y", 0), None);
    }
}
