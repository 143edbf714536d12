//! Constraint systems over the significant bits of every labelled value.
//!
//! The pessimistic system assumes a carry bit at every operation and is a
//! plain integer linear program. The refined system adds `nsb_e`, the
//! significant bits of each value's error, and replaces the constant carry
//! by a min-max carry-bit site per operation.

mod ilp;
mod minmax;
mod pi;

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

pub use minmax::{Affine, MinMax};

use crate::frontend::{Cmd, CmdKind, Env, Expr, ExprKind, Label, NodeKind, Program, Site};
use crate::range::{RangeMap, Ufp};
use crate::solver::{LinProgram, LinRow};

pub type VarId = usize;
pub type XiId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VarKind {
    Nsb(Site),
    NsbE(Site),
}

impl fmt::Display for VarKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (p, s) = match self {
            VarKind::Nsb(s) => ("nsb", s),
            VarKind::NsbE(s) => ("nsbe", s),
        };
        match s {
            Site::Label(l) => write!(f, "{}_l{}", p, l),
            Site::Input(i) => write!(f, "{}_in{}", p, i),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Ilp,
    Pi,
}

/// How loop bodies see the variables assigned before the loop.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LoopRule {
    /// body reads refer to the assignments reaching the loop entry
    EntryEnv,
    /// body reads refer to the loop's join label
    Fixpoint,
}

#[derive(Clone, Debug)]
pub struct GenConfig {
    pub method: Method,
    /// bits lost by elementary functions
    pub phi: i64,
    /// upper bound of every `nsb`; also the lower bound forced on the error
    /// bits of elementary-function results
    pub prec_max: i64,
    pub loop_rule: LoopRule,
}

impl Default for GenConfig {
    fn default() -> GenConfig {
        GenConfig {
            method: Method::Ilp,
            phi: 2,
            prec_max: 200,
            loop_rule: LoopRule::EntryEnv,
        }
    }
}

/// `Σ lhs ≥ rhs (+ ξ)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Constraint {
    pub lhs: Vec<(VarId, i64)>,
    pub rhs: i64,
    /// carry-bit site added to the right-hand side
    pub xi: Option<XiId>,
    pub rule: &'static str,
    pub label: Label,
}

/// Carry bit of the operation at `label` on operands `ops`:
/// `min(max(a, 0), max(b, 0), 1)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct XiSite {
    pub label: Label,
    pub ops: (Label, Label),
    pub a: Affine,
    pub b: Affine,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Branch {
    A,
    B,
    C,
}

impl Branch {
    pub const ALL: [Branch; 3] = [Branch::A, Branch::B, Branch::C];

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Branch::A => "A",
            Branch::B => "B",
            Branch::C => "C",
        })
    }
}

impl XiSite {
    pub fn term(&self) -> MinMax {
        let zero = MinMax::constant(0);
        MinMax::affine(self.a.clone())
            .max(&zero)
            .min(&MinMax::affine(self.b.clone()).max(&zero))
            .min(&MinMax::constant(1))
    }

    /// Value of one branch of the outer minimum at `x`.
    pub fn branch_value(&self, br: Branch, x: &[i64]) -> i64 {
        match br {
            Branch::A => self.a.eval(x).max(0),
            Branch::B => self.b.eval(x).max(0),
            Branch::C => 1,
        }
    }

    pub fn eval(&self, x: &[i64]) -> i64 {
        Branch::ALL.iter().map(|&b| self.branch_value(b, x)).min().unwrap()
    }

    /// The affine pieces whose maximum the branch stands for.
    fn pieces(&self, br: Branch) -> [Affine; 2] {
        match br {
            Branch::A => [self.a.clone(), Affine::constant(0)],
            Branch::B => [self.b.clone(), Affine::constant(0)],
            Branch::C => [Affine::constant(1), Affine::constant(1)],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ConstraintError {
    MissingRange(Label),
    UnboundedRange(Label),
    UseBeforeAssign { var: String, label: Label },
}

impl fmt::Display for ConstraintError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConstraintError::MissingRange(l) => write!(f, "no range for l{}", l),
            ConstraintError::UnboundedRange(l) => write!(f, "unbounded range at l{}", l),
            ConstraintError::UseBeforeAssign { var, label } => {
                write!(f, "l{}: {} read before assignment", label, var)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GenWarning {
    /// a rule needed the ufp of a label no analysed execution reaches
    SkippedUnreached { label: Label, rule: &'static str },
    /// a rule constrained a value that is exactly zero
    DroppedZero { label: Label, rule: &'static str },
}

impl fmt::Display for GenWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GenWarning::SkippedUnreached { label, rule } => {
                write!(f, "{} at l{} skipped: operand never executed", rule, label)
            }
            GenWarning::DroppedZero { label, rule } => {
                write!(f, "{} at l{} dropped: value is exactly zero", rule, label)
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct ConstraintSystem {
    pub method: Method,
    pub vars: Vec<VarKind>,
    pub constraints: Vec<Constraint>,
    pub xi_sites: Vec<XiSite>,
    /// upper bound per variable
    pub upper: Vec<Option<i64>>,
    /// free variables, indexed by `Site::Input`
    pub inputs: Vec<String>,
    pub warnings: Vec<GenWarning>,
    index: BTreeMap<VarKind, VarId>,
}

impl ConstraintSystem {
    pub fn var(&self, k: VarKind) -> Option<VarId> {
        self.index.get(&k).copied()
    }

    pub fn nsb(&self, l: Label) -> Option<VarId> {
        self.var(VarKind::Nsb(Site::Label(l)))
    }

    pub fn nsb_e(&self, l: Label) -> Option<VarId> {
        self.var(VarKind::NsbE(Site::Label(l)))
    }

    pub fn is_nsb(&self, v: VarId) -> bool {
        matches!(self.vars[v], VarKind::Nsb(_))
    }

    pub fn objective(&self, x: &[i64]) -> i64 {
        (0..self.vars.len()).filter(|&v| self.is_nsb(v)).map(|v| x[v]).sum()
    }

    /// All-`C` policy: a carry bit at every site.
    pub fn pessimistic_policy(&self) -> Vec<Branch> {
        alloc::vec![Branch::C; self.xi_sites.len()]
    }

    /// The linear program for one branch choice per carry-bit site; rows
    /// `lhs ≥ rhs + max(p1, p2)` become one row per piece.
    pub fn resolve(&self, policy: &[Branch]) -> LinProgram {
        assert_eq!(policy.len(), self.xi_sites.len(), "policy must cover every site");
        let n = self.vars.len();
        let mut lp = LinProgram::new(n);
        lp.upper = self.upper.clone();
        for v in 0..n {
            if self.is_nsb(v) {
                lp.primary[v] = 1;
            } else {
                lp.secondary[v] = 1;
            }
        }
        lp.names = self.vars.iter().map(|k| format!("{}", k)).collect();
        let mut seen = BTreeSet::new();
        let mut emit = |terms: Vec<(VarId, i64)>, rhs: i64| {
            let a = Affine::new(&terms, 0);
            if seen.insert((a.terms.clone(), rhs)) {
                lp.rows.push(LinRow { terms: a.terms, rhs });
            }
        };
        for c in &self.constraints {
            match c.xi {
                None => emit(c.lhs.clone(), c.rhs),
                Some(s) => {
                    for p in self.xi_sites[s].pieces(policy[s]) {
                        let mut t = c.lhs.clone();
                        t.extend(p.terms.iter().map(|&(v, a)| (v, -a)));
                        emit(t, c.rhs + p.constant);
                    }
                }
            }
        }
        lp
    }

    /// Whether `x` satisfies every constraint with the exact carry bits.
    pub fn holds(&self, x: &[i64]) -> bool {
        let row_ok = self.constraints.iter().all(|c| {
            let lhs: i64 = c.lhs.iter().map(|&(v, a)| a * x[v]).sum();
            let xi = c.xi.map_or(0, |s| self.xi_sites[s].eval(x));
            lhs >= c.rhs + xi
        });
        row_ok
            && x.iter()
                .zip(&self.upper)
                .all(|(v, u)| *v >= 0 && u.is_none_or(|u| *v <= u))
    }

    /// `nsb` per label, for labels that carry one.
    pub fn label_values(&self, x: &[i64]) -> BTreeMap<Label, i64> {
        self.index
            .iter()
            .filter_map(|(k, &v)| match k {
                VarKind::Nsb(Site::Label(l)) => Some((*l, x[v])),
                _ => None,
            })
            .collect()
    }
}

/// What a rule may assume about a label's ufp.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum UfpInfo {
    Known(i64),
    Zero,
    Unreached,
}

pub(crate) struct Generator<'a> {
    cfg: &'a GenConfig,
    ranges: &'a RangeMap,
    zero_inputs: BTreeSet<usize>,
    sys: ConstraintSystem,
    seen: BTreeSet<RowKey>,
}

/// A row's terms, right-hand side and guard, for deduplication.
type RowKey = (Vec<(VarId, i64)>, i64, Option<XiId>);

impl<'a> Generator<'a> {
    fn ufp(&self, l: Label) -> Result<UfpInfo, ConstraintError> {
        use crate::range::LabelRange;
        match self.ranges.labels.get(l) {
            Some(LabelRange::Numeric { ufp, .. }) => match ufp {
                Ufp::Finite(u) => Ok(UfpInfo::Known(*u)),
                Ufp::Zero => Ok(UfpInfo::Zero),
                Ufp::Unbounded => Err(ConstraintError::UnboundedRange(l)),
            },
            Some(LabelRange::Unreached) => Ok(UfpInfo::Unreached),
            _ => Err(ConstraintError::MissingRange(l)),
        }
    }

    fn is_zero_site(&self, s: Site) -> bool {
        match s {
            Site::Label(l) => matches!(self.ufp(l), Ok(UfpInfo::Zero)),
            Site::Input(i) => self.zero_inputs.contains(&i),
        }
    }

    fn var(&self, k: VarKind) -> VarId {
        self.sys.index[&k]
    }

    fn nsb(&self, s: Site) -> VarId {
        self.var(VarKind::Nsb(s))
    }

    fn nsb_e(&self, s: Site) -> VarId {
        self.var(VarKind::NsbE(s))
    }

    fn pi(&self) -> bool {
        self.cfg.method == Method::Pi
    }

    /// Adds `lhs ≥ rhs (+ξ)` unless it constrains an exactly-zero value.
    fn push(&mut self, subject: Site, lhs: Vec<(VarId, i64)>, rhs: i64, xi: Option<XiId>, rule: &'static str, label: Label) {
        if self.is_zero_site(subject) {
            self.sys.warnings.push(GenWarning::DroppedZero { label, rule });
            return;
        }
        let a = Affine::new(&lhs, 0);
        if self.seen.insert((a.terms.clone(), rhs, xi)) {
            self.sys.constraints.push(Constraint {
                lhs: a.terms,
                rhs,
                xi,
                rule,
                label,
            });
        }
    }

    /// `x(hi) ≥ x(lo) + k` on `nsb`.
    fn ge(&mut self, hi: Site, lo: Site, k: i64, xi: Option<XiId>, rule: &'static str, label: Label) {
        let (a, b) = (self.nsb(hi), self.nsb(lo));
        self.push(hi, alloc::vec![(a, 1), (b, -1)], k, xi, rule, label);
    }

    /// `x(hi) ≥ x(lo)` on `nsb_e`.
    fn ge_e(&mut self, hi: Site, lo: Site, rule: &'static str, label: Label) {
        let (a, b) = (self.nsb_e(hi), self.nsb_e(lo));
        self.push(hi, alloc::vec![(a, 1), (b, -1)], 0, None, rule, label);
    }

    fn lookup(&self, env: &Env, x: &str, label: Label) -> Result<Site, ConstraintError> {
        env.get(x).ok_or_else(|| ConstraintError::UseBeforeAssign {
            var: String::from(x),
            label,
        })
    }

    fn expr(&mut self, e: &Expr, env: &Env) -> Result<(), ConstraintError> {
        for c in e.children() {
            self.expr(c, env)?;
        }
        if let ExprKind::Var(x) = &e.kind {
            let s = self.lookup(env, x, e.label)?;
            self.id_rule(s, e.label);
            return Ok(());
        }
        self.expr_rules(e)
    }

    fn id_rule(&mut self, s: Site, l: Label) {
        self.ge(s, Site::Label(l), 0, None, "ID", l);
        if self.pi() {
            self.ge_e(s, Site::Label(l), "ID'", l);
        }
    }

    /// Ties `from(x) ≥ join` on both `nsb` and `nsb_e` for every variable.
    fn join(&mut self, from: &Env, join: Label, rule: &'static str) {
        let sites: Vec<Site> = from.iter().map(|(_, s)| *s).collect();
        for s in sites {
            self.ge(s, Site::Label(join), 0, None, rule, join);
            if self.pi() {
                self.ge_e(s, Site::Label(join), rule, join);
            }
        }
    }

    fn cmd(&mut self, c: &Cmd, env: Env) -> Result<Env, ConstraintError> {
        match &c.kind {
            CmdKind::Seq(cs) => {
                let mut env = env;
                for c in cs {
                    env = self.cmd(c, env)?;
                }
                Ok(env)
            }
            CmdKind::Assign { var, expr } => {
                self.expr(expr, &env)?;
                let (l, l1) = (Site::Label(c.label), Site::Label(expr.label));
                self.ge(l1, l, 0, None, "ASSIGN", c.label);
                if self.pi() {
                    self.ge_e(l1, l, "ASSIGN'", c.label);
                }
                let mut env = env;
                env.bind(var, l);
                Ok(env)
            }
            CmdKind::Require { var, nsb } => {
                let s = self.lookup(&env, var, c.label)?;
                let v = self.nsb(s);
                self.push(s, alloc::vec![(v, 1)], *nsb as i64, None, "REQ", c.label);
                Ok(env)
            }
            CmdKind::If {
                then_branch,
                else_branch,
                ..
            } => {
                let e1 = self.cmd(then_branch, env.clone())?;
                let e2 = match else_branch {
                    Some(b) => self.cmd(b, env.clone())?,
                    None => env,
                };
                self.join(&e1, c.label, "COND");
                self.join(&e2, c.label, "COND");
                Ok(Env::joined(c.label, &[&e1, &e2]))
            }
            CmdKind::While { body, .. } => {
                let inner_entry = match self.cfg.loop_rule {
                    LoopRule::EntryEnv => env.clone(),
                    LoopRule::Fixpoint => Env::joined(c.label, &[&env]),
                };
                let e1 = self.cmd(body, inner_entry)?;
                self.join(&env, c.label, "WHILE");
                self.join(&e1, c.label, "WHILE");
                Ok(Env::joined(c.label, &[&env, &e1]))
            }
        }
    }
}

/// Builds the constraint system of `prog` for `cfg.method`.
pub fn generate(prog: &Program, ranges: &RangeMap, cfg: &GenConfig) -> Result<ConstraintSystem, ConstraintError> {
    let inputs = prog.free_vars();
    let kinds = prog.node_kinds();
    let mut sites: Vec<Site> = (0..inputs.len()).map(Site::Input).collect();
    for (l, k) in kinds.iter().enumerate() {
        if k.is_numeric() || matches!(k, NodeKind::If | NodeKind::While) {
            sites.push(Site::Label(l));
        }
    }
    let mut vars = Vec::new();
    let mut upper = Vec::new();
    for &s in &sites {
        vars.push(VarKind::Nsb(s));
        upper.push(Some(cfg.prec_max));
    }
    if cfg.method == Method::Pi {
        for &s in &sites {
            vars.push(VarKind::NsbE(s));
            upper.push(None);
        }
    }
    let index = vars.iter().enumerate().map(|(i, k)| (*k, i)).collect();
    let zero_inputs = inputs
        .iter()
        .enumerate()
        .filter(|(_, x)| ranges.inputs.get(*x).is_some_and(|i| i.is_zero()))
        .map(|(i, _)| i)
        .collect();
    let mut g = Generator {
        cfg,
        ranges,
        zero_inputs,
        sys: ConstraintSystem {
            method: cfg.method,
            vars,
            constraints: Vec::new(),
            xi_sites: Vec::new(),
            upper,
            inputs: inputs.clone(),
            warnings: Vec::new(),
            index,
        },
        seen: BTreeSet::new(),
    };
    // exactly-zero values carry no significant bits
    for (v, k) in g.sys.vars.clone().into_iter().enumerate() {
        let (VarKind::Nsb(s) | VarKind::NsbE(s)) = k;
        if g.is_zero_site(s) {
            g.sys.upper[v] = Some(0);
        }
    }
    if let Some(body) = &prog.body {
        g.cmd(body, Env::with_inputs(&inputs))?;
    }
    Ok(g.sys)
}

impl fmt::Display for ConstraintSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.constraints {
            let mut first = true;
            for &(v, a) in &c.lhs {
                let sign = if a < 0 { "- " } else if first { "" } else { "+ " };
                let mag = a.abs();
                if mag == 1 {
                    write!(f, "{}{} ", sign, self.vars[v])?;
                } else {
                    write!(f, "{}{} {} ", sign, mag, self.vars[v])?;
                }
                first = false;
            }
            write!(f, ">= {}", c.rhs)?;
            if let Some(s) = c.xi {
                write!(f, " + xi{}", s)?;
            }
            writeln!(f, "    [{} l{}]", c.rule, c.label)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests;
