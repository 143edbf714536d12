//! Policy iteration over the carry-bit sites of a refined system.
//!
//! Each carry bit is `min(max(a,0), max(b,0), 1)`. A policy picks one
//! alternative of the outer minimum per site, which turns the system into a
//! linear program. Starting from the all-carry policy, every solve is
//! followed by choosing, at the new point, the alternative that attains the
//! minimum; the objective cannot increase and the loop stops as soon as it
//! no longer decreases.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::constraints::{Branch, ConstraintSystem};
use crate::solver::{solve_lp, Integrality, Solution, SolveError};

#[derive(Clone, Debug)]
pub struct PiConfig {
    /// hard cap on the number of solves
    pub max_iters: usize,
}

impl Default for PiConfig {
    fn default() -> PiConfig {
        PiConfig { max_iters: 1000 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PiStep {
    pub policy: Vec<Branch>,
    pub objective: i64,
    pub solution: Solution,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PiTrace {
    pub steps: Vec<PiStep>,
    /// the iteration cap stopped the loop
    pub hit_cap: bool,
    /// more solves than three per site plus one; reported, not fatal
    pub tripwire: bool,
}

impl PiTrace {
    pub fn objectives(&self) -> Vec<i64> {
        self.steps.iter().map(|s| s.objective).collect()
    }

    /// Objectives decrease strictly, except that the last may equal the one
    /// before it.
    pub fn strictly_decreasing(&self) -> bool {
        let o = self.objectives();
        let k = o.len();
        o.windows(2)
            .enumerate()
            .all(|(i, w)| w[1] < w[0] || (i + 2 == k && w[1] == w[0]))
    }

    pub fn has_repeated_policy(&self) -> bool {
        let mut seen = BTreeSet::new();
        !self.steps.iter().all(|s| seen.insert(s.policy.clone()))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PiError {
    Solve(SolveError),
    /// a policy came back after the objective had decreased
    PolicyCycle { step: usize },
    /// an invariant of the iteration failed
    Internal(String),
}

impl fmt::Display for PiError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PiError::Solve(e) => write!(f, "{}", e),
            PiError::PolicyCycle { step } => write!(f, "policy of step {} repeats an earlier one", step),
            PiError::Internal(m) => write!(f, "policy iteration: {}", m),
        }
    }
}

impl From<SolveError> for PiError {
    fn from(e: SolveError) -> PiError {
        PiError::Solve(e)
    }
}

/// Value of the carry bit of every site at `x`.
pub fn eval_xi(sys: &ConstraintSystem, x: &[i64]) -> Vec<i64> {
    sys.xi_sites.iter().map(|s| s.eval(x)).collect()
}

/// Per site, an alternative attaining the minimum at `x`: the current one
/// if it does, otherwise the first that does.
pub fn improve_policy(sys: &ConstraintSystem, x: &[i64], current: &[Branch]) -> Vec<Branch> {
    sys.xi_sites
        .iter()
        .zip(current)
        .map(|(site, &cur)| {
            let best = site.eval(x);
            if site.branch_value(cur, x) == best {
                cur
            } else {
                *Branch::ALL
                    .iter()
                    .find(|&&b| site.branch_value(b, x) == best)
                    .expect("the minimum is attained")
            }
        })
        .collect()
}

/// Runs policy iteration on a refined system. Returns the last solution,
/// its policy and the trace of every solve.
pub fn tune_pi(sys: &ConstraintSystem, cfg: &PiConfig) -> Result<(Solution, Vec<Branch>, PiTrace), PiError> {
    let mut trace = PiTrace::default();
    let mut policy = sys.pessimistic_policy();
    let tripwire_at = 3 * sys.xi_sites.len() + 1;
    loop {
        let sol = solve_lp(&sys.resolve(&policy), Integrality::BranchAndBound)?;
        if !sys.holds(&sol.values) {
            return Err(PiError::Internal(alloc::format!(
                "solution of step {} violates the exact system",
                trace.steps.len()
            )));
        }
        let improved = trace.steps.last().is_none_or(|s| sol.objective < s.objective);
        if let Some(prev) = trace.steps.last() {
            if sol.objective > prev.objective {
                return Err(PiError::Internal(alloc::format!(
                    "objective rose from {} to {}",
                    prev.objective,
                    sol.objective
                )));
            }
        }
        trace.steps.push(PiStep {
            policy: policy.clone(),
            objective: sol.objective,
            solution: sol.clone(),
        });
        trace.tripwire |= trace.steps.len() > tripwire_at;
        if !improved {
            return Ok((sol, policy, trace));
        }
        if trace.steps.len() >= cfg.max_iters {
            trace.hit_cap = true;
            return Ok((sol, policy, trace));
        }
        let next = improve_policy(sys, &sol.values, &policy);
        if next == policy {
            // the same program again: this point is already the answer
            return Ok((sol, policy, trace));
        }
        if trace.steps.iter().any(|s| s.policy == next) {
            return Err(PiError::PolicyCycle { step: trace.steps.len() });
        }
        policy = next;
    }
}
