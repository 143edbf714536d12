//! CPLEX LP text for a policy-resolved constraint system.

use std::fmt::Write;

use bittune_core::solver::LinProgram;

const TERMS_PER_LINE: usize = 8;

fn push_terms(out: &mut String, terms: &[(usize, i64)], names: &[String]) {
    let mut first = true;
    for (k, &(j, a)) in terms.iter().enumerate() {
        if a == 0 {
            continue;
        }
        if k > 0 && k % TERMS_PER_LINE == 0 {
            out.push_str("\n   ");
        }
        let sign = if a < 0 { "-" } else if first { "" } else { "+" };
        let mag = a.unsigned_abs();
        let sep = if first && a > 0 { "" } else { " " };
        if mag == 1 {
            let _ = write!(out, " {}{}{}", sign, sep, names[j]);
        } else {
            let _ = write!(out, " {}{}{} {}", sign, sep, mag, names[j]);
        }
        first = false;
    }
    if first {
        out.push_str(" 0");
    }
}

/// The primary objective, every row, the bounds and the integrality of all
/// variables. The secondary objective, minimised among primary optima, is
/// given as a comment: the format has no lexicographic objectives.
pub fn write_lp(lp: &LinProgram, title: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "\\ {}", title);
    let secondary: Vec<(usize, i64)> = lp.secondary.iter().copied().enumerate().filter(|p| p.1 != 0).collect();
    if !secondary.is_empty() {
        let mut s = String::new();
        push_terms(&mut s, &secondary, &lp.names);
        let _ = writeln!(out, "\\ then minimise:{}", s.replace('\n', "\n\\  "));
    }
    out.push_str("Minimize\n obj:");
    let primary: Vec<(usize, i64)> = lp.primary.iter().copied().enumerate().filter(|p| p.1 != 0).collect();
    push_terms(&mut out, &primary, &lp.names);
    out.push_str("\nSubject To\n");
    for (i, row) in lp.rows.iter().enumerate() {
        if row.terms.is_empty() {
            continue;
        }
        let _ = write!(out, " c{}:", i);
        push_terms(&mut out, &row.terms, &lp.names);
        let _ = writeln!(out, " >= {}", row.rhs);
    }
    out.push_str("Bounds\n");
    for j in 0..lp.n {
        match lp.upper[j] {
            Some(u) => {
                let _ = writeln!(out, " 0 <= {} <= {}", lp.names[j], u);
            }
            None => {
                let _ = writeln!(out, " {} >= 0", lp.names[j]);
            }
        }
    }
    out.push_str("General\n");
    for chunk in lp.names.chunks(TERMS_PER_LINE) {
        let _ = writeln!(out, " {}", chunk.join(" "));
    }
    out.push_str("End\n");
    out
}
