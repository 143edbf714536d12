//! Depth-first branch and bound on exact relaxations.

use alloc::vec::Vec;

use super::simplex::{solve_relaxation, LpOutcome};
use super::{find_iis, LinProgram, SolveError};
use crate::rational::Q;

/// Returns the integral optimum, the node count and the total pivot count.
pub(super) fn branch_and_bound(lp: &LinProgram) -> Result<(Vec<i64>, usize, usize), SolveError> {
    let mut best: Option<(Q, Q, Vec<i64>)> = None;
    let mut stack: Vec<Vec<(usize, i64, bool)>> = alloc::vec![Vec::new()];
    let (mut nodes, mut pivots) = (0usize, 0usize);
    while let Some(bounds) = stack.pop() {
        nodes += 1;
        let x = match solve_relaxation(lp, &bounds) {
            LpOutcome::Optimal { x, pivots: p } => {
                pivots += p;
                x
            }
            LpOutcome::Infeasible { pivots: p } => {
                pivots += p;
                continue;
            }
            LpOutcome::Unbounded => return Err(SolveError::Unbounded),
        };
        let obj = weighted(&lp.primary, &x);
        let obj2 = weighted(&lp.secondary, &x);
        if let Some((b1, b2, _)) = &best {
            // relaxation bounds every descendant lexicographically
            if (&obj, &obj2) >= (b1, b2) {
                continue;
            }
        }
        match x.iter().position(|v| !v.is_integer()) {
            None => {
                let v = x.iter().map(|q| q.to_i64().expect("integral")).collect();
                best = Some((obj, obj2, v));
            }
            Some(j) => {
                let lo = x[j].floor().to_i64().expect("bounded");
                let mut down = bounds.clone();
                down.push((j, lo, true));
                let mut up = bounds;
                up.push((j, lo + 1, false));
                // explore the rounded-down side first
                stack.push(up);
                stack.push(down);
            }
        }
    }
    match best {
        Some((_, _, v)) => Ok((v, nodes, pivots)),
        None => Err(SolveError::Infeasible { iis: find_iis(lp) }),
    }
}

fn weighted(c: &[i64], x: &[Q]) -> Q {
    c.iter()
        .zip(x)
        .filter(|(c, _)| **c != 0)
        .fold(Q::ZERO, |acc, (c, v)| &acc + &(&Q::int(*c) * v))
}
