//! Ascending Kleene iteration for order-preserving max-of-affine systems.

use alloc::vec;
use alloc::vec::Vec;

use super::{LinProgram, Solution, SolveError, SolveStats};

struct Rule {
    lhs: usize,
    deps: Vec<(usize, i64)>,
    rhs: i64,
}

/// Least `x ≥ 0` with `x[lhs] ≥ Σ w·x[dep] + b` for every row, by sweeps
/// `x ← max(x, F(x))` from zero in variable order. Each row must have exactly
/// one coefficient `+1` and all other coefficients negative.
pub fn kleene_least_fixpoint(lp: &LinProgram) -> Result<Solution, SolveError> {
    let mut rules = Vec::with_capacity(lp.rows.len());
    for (i, r) in lp.rows.iter().enumerate() {
        let pos: Vec<_> = r.terms.iter().filter(|(_, a)| *a > 0).collect();
        if pos.len() != 1 || pos[0].1 != 1 {
            // rows without a positive term are only satisfiable if constant
            if pos.is_empty() && r.terms.is_empty() && r.rhs <= 0 {
                continue;
            }
            return Err(SolveError::NotMonotone { row: i });
        }
        rules.push(Rule {
            lhs: pos[0].0,
            deps: r
                .terms
                .iter()
                .filter(|(_, a)| *a < 0)
                .map(|&(j, a)| (j, -a))
                .collect(),
            rhs: r.rhs,
        });
    }
    rules.sort_by_key(|r| r.lhs);
    let mut x = vec![0i64; lp.n];
    let mut sweeps = 0;
    loop {
        sweeps += 1;
        let mut changed = false;
        for r in &rules {
            let v = r.deps.iter().map(|&(j, w)| w * x[j]).sum::<i64>() + r.rhs;
            if v > x[r.lhs] {
                x[r.lhs] = v;
                changed = true;
                if lp.upper[r.lhs].is_some_and(|u| v > u) {
                    return Err(SolveError::NoFixpointBelowCeiling { var: r.lhs });
                }
            }
        }
        if !changed {
            break;
        }
    }
    Ok(Solution {
        objective: lp.objective(&x),
        secondary: lp.secondary_objective(&x),
        values: x,
        stats: SolveStats {
            kleene_sweeps: sweeps,
            relaxation_integral: true,
            ..Default::default()
        },
    })
}

#[cfg(test)]
mod tests {
    use super::super::LinRow;
    use super::*;

    #[test]
    fn two_variable_chain() {
        let mut lp = LinProgram::new(2);
        lp.rows.push(LinRow {
            terms: vec![(0, 1), (1, -1)],
            rhs: 0,
        });
        lp.rows.push(LinRow {
            terms: vec![(1, 1)],
            rhs: 15,
        });
        let s = kleene_least_fixpoint(&lp).unwrap();
        assert_eq!(s.values, [15, 15]);
        assert!(s.stats.kleene_sweeps <= 3);
    }

    #[test]
    fn positive_cycle_hits_ceiling() {
        let mut lp = LinProgram::new(2);
        lp.upper = vec![Some(200), Some(200)];
        lp.rows.push(LinRow {
            terms: vec![(0, 1), (1, -1)],
            rhs: 1,
        });
        lp.rows.push(LinRow {
            terms: vec![(1, 1), (0, -1)],
            rhs: 0,
        });
        assert!(matches!(
            kleene_least_fixpoint(&lp),
            Err(SolveError::NoFixpointBelowCeiling { .. })
        ));
    }

    #[test]
    fn not_monotone_rejected() {
        let mut lp = LinProgram::new(2);
        lp.rows.push(LinRow {
            terms: vec![(0, 1), (1, 1)],
            rhs: 3,
        });
        assert_eq!(kleene_least_fixpoint(&lp).unwrap_err(), SolveError::NotMonotone { row: 0 });
    }
}
