use alloc::string::String;
use core::fmt::Write;

use super::ast::*;

/// Per-label annotation source; `None` prints the node bare.
pub type Annot<'a> = &'a dyn Fn(Label) -> Option<u32>;

/// Source text without annotations.
pub fn print_program(p: &Program) -> String {
    print_annotated(p, &|_| None)
}

/// Source text with `|n|` after every numeric node that has a value.
pub fn print_annotated(p: &Program, ann: Annot<'_>) -> String {
    let mut out = String::new();
    if let Some(body) = &p.body {
        match &body.kind {
            CmdKind::Seq(cs) => cs.iter().for_each(|c| cmd(&mut out, c, 0, ann)),
            _ => cmd(&mut out, body, 0, ann),
        }
    }
    out
}

fn tag(out: &mut String, l: Label, ann: Annot<'_>) {
    if let Some(n) = ann(l) {
        let _ = write!(out, "|{}|", n);
    }
}

fn indent(out: &mut String, depth: usize) {
    for _ in 0..depth {
        out.push_str("  ");
    }
}

fn block(out: &mut String, c: &Cmd, depth: usize, ann: Annot<'_>) {
    out.push_str("{\n");
    match &c.kind {
        CmdKind::Seq(cs) => cs.iter().for_each(|c| cmd(out, c, depth + 1, ann)),
        _ => cmd(out, c, depth + 1, ann),
    }
    indent(out, depth);
    out.push('}');
}

fn cmd(out: &mut String, c: &Cmd, depth: usize, ann: Annot<'_>) {
    indent(out, depth);
    match &c.kind {
        CmdKind::Seq(_) => {
            // nested anonymous block; only produced by hand-built trees
            block(out, c, depth, ann);
        }
        CmdKind::Assign { var, expr: e } => {
            out.push_str(var);
            tag(out, c.label, ann);
            out.push_str(" = ");
            expr(out, e, ann);
        }
        CmdKind::While { cond: b, body } => {
            out.push_str("while (");
            cond(out, b, 0);
            out.push_str(") ");
            block(out, body, depth, ann);
        }
        CmdKind::If {
            cond: b,
            then_branch,
            else_branch,
        } => {
            out.push_str("if (");
            cond(out, b, 0);
            out.push_str(") ");
            block(out, then_branch, depth, ann);
            if let Some(e) = else_branch {
                out.push_str(" else ");
                block(out, e, depth, ann);
            }
        }
        CmdKind::Require { var, nsb } => {
            let _ = write!(out, "require_nsb({},{})", var, nsb);
        }
    }
    out.push_str(";\n");
}

fn expr(out: &mut String, e: &Expr, ann: Annot<'_>) {
    match &e.kind {
        ExprKind::Const {
            value,
            prec,
            explicit_prec,
        } => {
            out.push_str(&value.text);
            if *explicit_prec {
                let _ = write!(out, "#{}", prec);
            }
            tag(out, e.label, ann);
        }
        ExprKind::Var(x) => {
            out.push_str(x);
            tag(out, e.label, ann);
        }
        ExprKind::Bin(op, a, b) => {
            let p = op.precedence();
            operand(out, a, p, false, ann);
            out.push(' ');
            out.push_str(op.symbol());
            tag(out, e.label, ann);
            out.push(' ');
            operand(out, b, p, true, ann);
        }
        ExprKind::Math(f, a) => {
            out.push_str(f.name());
            out.push('(');
            expr(out, a, ann);
            out.push(')');
            tag(out, e.label, ann);
        }
        ExprKind::Sqrt(a) => {
            out.push_str("sqrt(");
            expr(out, a, ann);
            out.push(')');
            tag(out, e.label, ann);
        }
    }
}

fn operand(out: &mut String, e: &Expr, parent: u8, right: bool, ann: Annot<'_>) {
    let needs = match &e.kind {
        ExprKind::Bin(op, ..) => {
            let p = op.precedence();
            p < parent || (right && p == parent)
        }
        _ => false,
    };
    if needs {
        out.push('(');
        expr(out, e, ann);
        out.push(')');
    } else {
        expr(out, e, ann);
    }
}

fn cond_prec(c: &Cond) -> u8 {
    match c.kind {
        CondKind::Or(..) => 1,
        CondKind::And(..) => 2,
        CondKind::Not(_) => 3,
        CondKind::Cmp(..) => 4,
    }
}

fn cond(out: &mut String, c: &Cond, parent: u8) {
    let p = cond_prec(c);
    let paren = p < parent;
    if paren {
        out.push('(');
    }
    match &c.kind {
        CondKind::Cmp(op, a, b) => {
            expr(out, a, &|_| None);
            let _ = write!(out, " {} ", op.symbol());
            expr(out, b, &|_| None);
        }
        CondKind::And(a, b) => {
            cond(out, a, 2);
            out.push_str(" && ");
            cond(out, b, 3);
        }
        CondKind::Or(a, b) => {
            cond(out, a, 1);
            out.push_str(" || ");
            cond(out, b, 2);
        }
        CondKind::Not(a) => {
            out.push('!');
            cond(out, a, 4);
        }
    }
    if paren {
        out.push(')');
    }
}
