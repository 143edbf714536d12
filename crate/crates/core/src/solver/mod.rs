//! Exact solving of `min Σ c·x` over `Σ a·x ≥ b`, `0 ≤ x ≤ u`.
//!
//! The continuous relaxation is solved by exact-rational simplex. Systems
//! whose rows all have the shape `x ≥ Σ w·y + b` with `w ≥ 0` can also be
//! solved by ascending Kleene iteration, which serves as an independent
//! oracle. Non-integral relaxations fall back to branch and bound.

mod bnb;
mod kleene;
mod simplex;

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

pub use kleene::kleene_least_fixpoint;

use crate::rational::Q;
use simplex::{solve_relaxation, LpOutcome};

/// `Σ coeff·x[var] ≥ rhs`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinRow {
    pub terms: Vec<(usize, i64)>,
    pub rhs: i64,
}

impl LinRow {
    pub fn eval(&self, x: &[i64]) -> i64 {
        self.terms.iter().map(|&(j, a)| a * x[j]).sum()
    }

    pub fn holds(&self, x: &[i64]) -> bool {
        self.eval(x) >= self.rhs
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LinProgram {
    pub n: usize,
    pub rows: Vec<LinRow>,
    /// per-variable upper bound; lower bounds are always 0
    pub upper: Vec<Option<i64>>,
    /// non-negative costs of the objective
    pub primary: Vec<i64>,
    /// non-negative costs minimised among primary optima
    pub secondary: Vec<i64>,
    /// variable names for diagnostics
    pub names: Vec<String>,
}

impl LinProgram {
    pub fn new(n: usize) -> LinProgram {
        LinProgram {
            n,
            rows: Vec::new(),
            upper: alloc::vec![None; n],
            primary: alloc::vec![0; n],
            secondary: alloc::vec![0; n],
            names: (0..n).map(|i| alloc::format!("x{}", i)).collect(),
        }
    }

    pub fn objective(&self, x: &[i64]) -> i64 {
        self.primary.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    pub fn secondary_objective(&self, x: &[i64]) -> i64 {
        self.secondary.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Index of the first violated row, or `n_rows + j` for a violated bound.
    pub fn first_violation(&self, x: &[i64]) -> Option<usize> {
        if let Some(i) = self.rows.iter().position(|r| !r.holds(x)) {
            return Some(i);
        }
        (0..self.n)
            .find(|&j| x[j] < 0 || self.upper[j].is_some_and(|u| x[j] > u))
            .map(|j| self.rows.len() + j)
    }

    pub fn is_feasible(&self, x: &[i64]) -> bool {
        x.len() == self.n && self.first_violation(x).is_none()
    }

    fn with_rows(&self, keep: &[bool]) -> LinProgram {
        let mut p = self.clone();
        p.rows = self
            .rows
            .iter()
            .zip(keep)
            .filter(|(_, k)| **k)
            .map(|(r, _)| r.clone())
            .collect();
        p
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SolveStats {
    pub pivots: usize,
    pub bnb_nodes: usize,
    pub relaxation_integral: bool,
    pub kleene_sweeps: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Solution {
    pub values: Vec<i64>,
    pub objective: i64,
    pub secondary: i64,
    pub stats: SolveStats,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SolveError {
    /// `iis` lists the rows of an irreducible infeasible subsystem; bound
    /// rows are kept implicitly
    Infeasible { iis: Vec<usize> },
    Unbounded,
    /// the relaxation of a system that must be integral was not
    NonIntegralIlp { var: usize, value: String },
    NoFixpointBelowCeiling { var: usize },
    /// a row is not of the form `x ≥ Σ w·y + b` with `w ≥ 0`
    NotMonotone { row: usize },
    /// the returned point failed the exact re-check
    Internal(String),
}

impl fmt::Display for SolveError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolveError::Infeasible { iis } => {
                write!(f, "infeasible; irreducible subsystem rows {:?}", iis)
            }
            SolveError::Unbounded => f.write_str("unbounded"),
            SolveError::NonIntegralIlp { var, value } => {
                write!(f, "non-integral relaxation optimum x{} = {}", var, value)
            }
            SolveError::NoFixpointBelowCeiling { var } => {
                write!(f, "ascending iteration exceeded the bound of x{}", var)
            }
            SolveError::NotMonotone { row } => write!(f, "row {} is not order-preserving", row),
            SolveError::Internal(m) => write!(f, "internal solver error: {}", m),
        }
    }
}

/// How to treat a non-integral relaxation optimum.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Integrality {
    /// an error: the system is known to have integral vertices
    Required,
    /// fall back to branch and bound
    BranchAndBound,
}

fn to_integral(x: &[Q]) -> Result<Vec<i64>, usize> {
    x.iter()
        .enumerate()
        .map(|(j, v)| v.to_i64().ok_or(j))
        .collect()
}

/// Optimum of `lp`, lexicographically minimising `primary` then `secondary`.
pub fn solve_lp(lp: &LinProgram, mode: Integrality) -> Result<Solution, SolveError> {
    let mut stats = SolveStats::default();
    let x = match solve_relaxation(lp, &[]) {
        LpOutcome::Optimal { x, pivots } => {
            stats.pivots = pivots;
            x
        }
        LpOutcome::Infeasible { .. } => return Err(SolveError::Infeasible { iis: find_iis(lp) }),
        LpOutcome::Unbounded => return Err(SolveError::Unbounded),
    };
    let values = match to_integral(&x) {
        Ok(v) => {
            stats.relaxation_integral = true;
            v
        }
        Err(j) => match mode {
            Integrality::Required => {
                return Err(SolveError::NonIntegralIlp {
                    var: j,
                    value: alloc::format!("{}", x[j]),
                })
            }
            Integrality::BranchAndBound => {
                let (v, nodes, pivots) = bnb::branch_and_bound(lp)?;
                stats.bnb_nodes = nodes;
                stats.pivots += pivots;
                v
            }
        },
    };
    finish(lp, values, stats)
}

/// Branch and bound directly, for testing against `solve_lp`.
pub fn branch_and_bound(lp: &LinProgram) -> Result<Solution, SolveError> {
    let (v, nodes, pivots) = bnb::branch_and_bound(lp)?;
    let stats = SolveStats {
        pivots,
        bnb_nodes: nodes,
        relaxation_integral: nodes <= 1,
        kleene_sweeps: 0,
    };
    finish(lp, v, stats)
}

fn finish(lp: &LinProgram, mut values: Vec<i64>, stats: SolveStats) -> Result<Solution, SolveError> {
    if let Some(i) = lp.first_violation(&values) {
        return Err(SolveError::Internal(alloc::format!("solution violates row {}", i)));
    }
    tighten(lp, &mut values);
    Ok(Solution {
        objective: lp.objective(&values),
        secondary: lp.secondary_objective(&values),
        values,
        stats,
    })
}

/// Lowers single coordinates with positive cost while the point stays
/// feasible, until no coordinate can be lowered.
pub fn tighten(lp: &LinProgram, x: &mut [i64]) -> usize {
    let mut lowered = 0;
    loop {
        let mut changed = false;
        for j in 0..lp.n {
            if lp.primary[j] == 0 && lp.secondary[j] == 0 {
                continue;
            }
            while x[j] > 0 {
                x[j] -= 1;
                if lp.is_feasible(x) {
                    lowered += 1;
                    changed = true;
                } else {
                    x[j] += 1;
                    break;
                }
            }
        }
        if !changed {
            return lowered;
        }
    }
}

/// Deletion filter: the rows of an irreducible infeasible subsystem.
pub fn find_iis(lp: &LinProgram) -> Vec<usize> {
    let feasible = |keep: &[bool]| {
        !matches!(
            solve_relaxation(&lp.with_rows(keep).zero_objective(), &[]),
            LpOutcome::Infeasible { .. }
        )
    };
    let mut keep = alloc::vec![true; lp.rows.len()];
    if feasible(&keep) {
        return Vec::new();
    }
    for i in 0..keep.len() {
        keep[i] = false;
        if feasible(&keep) {
            keep[i] = true;
        }
    }
    (0..keep.len()).filter(|&i| keep[i]).collect()
}

impl LinProgram {
    fn zero_objective(mut self) -> LinProgram {
        self.primary.iter_mut().for_each(|c| *c = 0);
        self.secondary.iter_mut().for_each(|c| *c = 0);
        self
    }
}
