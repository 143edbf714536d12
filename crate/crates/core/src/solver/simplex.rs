//! Dense exact-rational simplex in dictionary form.
//!
//! Rows are `Σ a_j x_j ≥ b` with `x ≥ 0`. The all-zero point is dual
//! feasible for non-negative costs, so the primary objective is solved by the
//! dual simplex from the slack basis; the secondary objective is then
//! minimised by primal simplex over the columns with zero primary reduced
//! cost, which keeps the primary optimum. Both phases use Bland's rule.

use alloc::vec;
use alloc::vec::Vec;

use super::LinProgram;
use crate::rational::Q;

pub(crate) enum LpOutcome {
    Optimal { x: Vec<Q>, pivots: usize },
    Infeasible { pivots: usize },
    Unbounded,
}

struct Dict {
    /// global id of the basic variable of each row; ids `< n` are structural
    basis: Vec<usize>,
    /// global id of the variable at each column
    nonbasic: Vec<usize>,
    beta: Vec<Q>,
    tab: Vec<Vec<Q>>,
    d: Vec<Q>,
    d2: Vec<Q>,
    pivots: usize,
}

impl Dict {
    fn new(lp: &LinProgram, extra: &[(usize, i64, bool)]) -> Dict {
        let n = lp.n;
        let mut beta = Vec::new();
        let mut tab = Vec::new();
        let mut push = |terms: &mut dyn Iterator<Item = (usize, i64)>, rhs: i64| {
            let mut row = vec![Q::ZERO; n];
            for (j, a) in terms {
                row[j] = &row[j] + &Q::int(a);
            }
            tab.push(row);
            beta.push(Q::int(-rhs));
        };
        for r in &lp.rows {
            push(&mut r.terms.iter().copied(), r.rhs);
        }
        for (j, u) in lp.upper.iter().enumerate() {
            if let Some(u) = u {
                push(&mut core::iter::once((j, -1)), -u);
            }
        }
        // branching bounds: (var, bound, is_upper)
        for &(j, v, up) in extra {
            if up {
                push(&mut core::iter::once((j, -1)), -v);
            } else {
                push(&mut core::iter::once((j, 1)), v);
            }
        }
        let m = tab.len();
        Dict {
            basis: (n..n + m).collect(),
            nonbasic: (0..n).collect(),
            beta,
            tab,
            d: lp.primary.iter().map(|&c| Q::int(c)).collect(),
            d2: lp.secondary.iter().map(|&c| Q::int(c)).collect(),
            pivots: 0,
        }
    }

    fn pivot(&mut self, r: usize, k: usize) {
        self.pivots += 1;
        let a = self.tab[r][k].clone();
        let inv = &Q::ONE / &a;
        // rewrite row r for the entering variable
        let neg_inv = -&inv;
        let mut nz = Vec::new();
        for (j, v) in self.tab[r].iter_mut().enumerate() {
            if j == k {
                *v = inv.clone();
            } else if !v.is_zero() {
                *v = &*v * &neg_inv;
                nz.push(j);
            }
        }
        self.beta[r] = &self.beta[r] * &neg_inv;
        let prow = self.tab[r].clone();
        let pbeta = self.beta[r].clone();
        let update = |row: &mut [Q], beta: Option<&mut Q>, coef: Q| {
            for &j in &nz {
                row[j] = &row[j] + &(&coef * &prow[j]);
            }
            row[k] = &coef * &prow[k];
            if let Some(b) = beta {
                *b = &*b + &(&coef * &pbeta);
            }
        };
        for i in 0..self.tab.len() {
            if i == r || self.tab[i][k].is_zero() {
                continue;
            }
            let coef = self.tab[i][k].clone();
            update(&mut self.tab[i], Some(&mut self.beta[i]), coef);
        }
        for obj in [&mut self.d, &mut self.d2] {
            if !obj[k].is_zero() {
                let coef = obj[k].clone();
                update(obj, None, coef);
            }
        }
        core::mem::swap(&mut self.basis[r], &mut self.nonbasic[k]);
    }

    /// Dual simplex on the primary costs; `false` when infeasible.
    fn dual(&mut self) -> bool {
        loop {
            let leave = (0..self.beta.len())
                .filter(|&i| self.beta[i].is_negative())
                .min_by_key(|&i| self.basis[i]);
            let Some(r) = leave else { return true };
            let mut best: Option<(usize, Q)> = None;
            for k in 0..self.nonbasic.len() {
                let a = &self.tab[r][k];
                if !a.is_positive() {
                    continue;
                }
                let ratio = &self.d[k] / a;
                let better = match &best {
                    None => true,
                    Some((bk, br)) => {
                        ratio < *br || (ratio == *br && self.nonbasic[k] < self.nonbasic[*bk])
                    }
                };
                if better {
                    best = Some((k, ratio));
                }
            }
            match best {
                Some((k, _)) => self.pivot(r, k),
                None => return false,
            }
        }
    }

    /// Primal simplex on the secondary costs over zero-reduced-cost columns.
    fn secondary(&mut self) -> bool {
        loop {
            let enter = (0..self.nonbasic.len())
                .filter(|&k| self.d[k].is_zero() && self.d2[k].is_negative())
                .min_by_key(|&k| self.nonbasic[k]);
            let Some(k) = enter else { return true };
            let mut best: Option<(usize, Q)> = None;
            for i in 0..self.beta.len() {
                let a = &self.tab[i][k];
                if !a.is_negative() {
                    continue;
                }
                let ratio = &self.beta[i] / &(-a);
                let better = match &best {
                    None => true,
                    Some((bi, br)) => ratio < *br || (ratio == *br && self.basis[i] < self.basis[*bi]),
                };
                if better {
                    best = Some((i, ratio));
                }
            }
            match best {
                Some((r, _)) => self.pivot(r, k),
                None => return false,
            }
        }
    }

    fn point(&self, n: usize) -> Vec<Q> {
        let mut x = vec![Q::ZERO; n];
        for (i, &b) in self.basis.iter().enumerate() {
            if b < n {
                x[b] = self.beta[i].clone();
            }
        }
        x
    }
}

/// Lexicographic optimum of the continuous relaxation, with extra variable
/// bounds `(var, value, is_upper)`.
pub(crate) fn solve_relaxation(lp: &LinProgram, extra: &[(usize, i64, bool)]) -> LpOutcome {
    let mut d = Dict::new(lp, extra);
    if !d.dual() {
        return LpOutcome::Infeasible { pivots: d.pivots };
    }
    if !d.secondary() {
        return LpOutcome::Unbounded;
    }
    LpOutcome::Optimal {
        x: d.point(lp.n),
        pivots: d.pivots,
    }
}
