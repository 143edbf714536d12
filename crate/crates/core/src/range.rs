//! Static interval range analysis.
//!
//! Forward evaluation over `f64` intervals with outward rounding. Exactness
//! of `+ - * / sqrt` results is decided with error-free transformations, so
//! exactly representable results stay point intervals; library math
//! functions are widened by two ulps on each side.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI};
use core::fmt;

use num_rational::BigRational;
use num_traits::ToPrimitive;

use crate::frontend::{
    find_occurrence, BinOp, Cmd, CmdKind, CmpOp, Cond, CondKind, Expr, ExprKind, Label, MathFn,
    NodeKind, Program,
};
use crate::ufp::{ufp_f64, ufp_rational};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Ufp {
    Finite(i64),
    /// the value is exactly zero
    Zero,
    /// some bound is infinite
    Unbounded,
}

impl fmt::Display for Ufp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ufp::Finite(u) => write!(f, "{}", u),
            Ufp::Zero => f.write_str("zero"),
            Ufp::Unbounded => f.write_str("unbounded"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum LabelRange {
    Numeric { interval: Interval, ufp: Ufp },
    /// statements and conditions
    NotNumeric,
    /// no analysed execution reaches the label
    Unreached,
}

#[derive(Clone, Debug, PartialEq)]
pub enum RangeWarning {
    /// a loop did not stabilise and `var` was widened
    Widened { loop_label: Label, var: String, to: Interval },
    /// the loop body left the configured enclosure for `var`
    EnclosureEscaped { loop_label: Label, var: String },
    /// an argument interval was clipped to a function's domain
    DomainClipped { label: Label },
    NeverExecuted { label: Label },
}

impl fmt::Display for RangeWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RangeWarning::Widened { loop_label, var, to } => {
                write!(f, "loop l{}: {} widened to {}", loop_label, var, to)
            }
            RangeWarning::EnclosureEscaped { loop_label, var } => {
                write!(f, "loop l{}: {} escapes its configured enclosure", loop_label, var)
            }
            RangeWarning::DomainClipped { label } => {
                write!(f, "l{}: argument clipped to the function domain", label)
            }
            RangeWarning::NeverExecuted { label } => write!(f, "l{}: never executed", label),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum RangeError {
    MissingInput(String),
    UseBeforeAssign { var: String, label: Label },
    DivisionByZeroRange(Label),
    DomainError { label: Label, func: &'static str },
    UnboundedRange(Label),
    InvalidInterval { what: String },
}

impl fmt::Display for RangeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RangeError::MissingInput(x) => write!(f, "no input interval for free variable {}", x),
            RangeError::UseBeforeAssign { var, label } => {
                write!(f, "l{}: {} read before assignment", label, var)
            }
            RangeError::DivisionByZeroRange(l) => write!(f, "l{}: divisor interval contains 0", l),
            RangeError::DomainError { label, func } => {
                write!(f, "l{}: argument outside the domain of {}", label, func)
            }
            RangeError::UnboundedRange(l) => write!(f, "l{}: unbounded range used arithmetically", l),
            RangeError::InvalidInterval { what } => write!(f, "invalid interval: {}", what),
        }
    }
}

#[derive(Clone, Debug)]
pub struct RangeConfig {
    pub max_loop_iters: usize,
    /// bounds a loop-carried variable jumps to when its loop does not settle
    pub enclosures: BTreeMap<String, Interval>,
}

impl Default for RangeConfig {
    fn default() -> RangeConfig {
        RangeConfig {
            max_loop_iters: 64,
            enclosures: BTreeMap::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RangeMap {
    pub labels: Vec<LabelRange>,
    pub inputs: BTreeMap<String, Interval>,
    pub warnings: Vec<RangeWarning>,
}

// ---------------------------------------------------------------- intervals

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let e = (a - (s - bb)) + (b - bb);
    (s, e)
}

fn fix_nan(x: f64, fallback: f64) -> f64 {
    if x.is_nan() {
        fallback
    } else {
        x
    }
}

fn add_dir(a: f64, b: f64, up: bool) -> f64 {
    let s = a + b;
    if !s.is_finite() {
        return fix_nan(s, if up { f64::INFINITY } else { f64::NEG_INFINITY });
    }
    let (_, e) = two_sum(a, b);
    if up && e > 0.0 {
        s.next_up()
    } else if !up && e < 0.0 {
        s.next_down()
    } else {
        s
    }
}

fn mul_dir(a: f64, b: f64, up: bool) -> f64 {
    if a == 0.0 || b == 0.0 {
        return 0.0;
    }
    let p = a * b;
    if !p.is_finite() {
        return p;
    }
    if p == 0.0 || p.is_subnormal() {
        return if up { p.next_up() } else { p.next_down() };
    }
    let e = libm::fma(a, b, -p);
    if up && e > 0.0 {
        p.next_up()
    } else if !up && e < 0.0 {
        p.next_down()
    } else {
        p
    }
}

fn div_dir(a: f64, b: f64, up: bool) -> f64 {
    if a == 0.0 {
        return 0.0;
    }
    if b.is_infinite() {
        // quotient tends to zero from the side of the signs
        return if (a > 0.0) == (b > 0.0) {
            if up { f64::MIN_POSITIVE } else { 0.0 }
        } else if up {
            0.0
        } else {
            -f64::MIN_POSITIVE
        };
    }
    let q = a / b;
    if !q.is_finite() {
        return q;
    }
    if q == 0.0 || q.is_subnormal() {
        return if up { q.next_up() } else { q.next_down() };
    }
    let r = libm::fma(-q, b, a);
    let sign = if r == 0.0 {
        0.0
    } else if (r > 0.0) == (b > 0.0) {
        1.0
    } else {
        -1.0
    };
    if up && sign > 0.0 {
        q.next_up()
    } else if !up && sign < 0.0 {
        q.next_down()
    } else {
        q
    }
}

/// Widens a libm result, assumed within one ulp, by two ulps.
fn nudge(x: f64, up: bool) -> f64 {
    if !x.is_finite() {
        return x;
    }
    if up {
        x.next_up().next_up()
    } else {
        x.next_down().next_down()
    }
}

impl Interval {
    pub const ENTIRE: Interval = Interval {
        lo: f64::NEG_INFINITY,
        hi: f64::INFINITY,
    };

    pub fn new(lo: f64, hi: f64) -> Result<Interval, RangeError> {
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return Err(RangeError::InvalidInterval {
                what: alloc::format!("[{}, {}]", lo, hi),
            });
        }
        Ok(Interval { lo, hi })
    }

    pub fn point(x: f64) -> Interval {
        Interval { lo: x, hi: x }
    }

    /// Tightest enclosure of an exact rational.
    pub fn from_rational(q: &BigRational) -> Interval {
        let f = q.to_f64().unwrap_or(f64::NAN);
        if f.is_nan() {
            return Interval::ENTIRE;
        }
        if f.is_finite() {
            if let Some(back) = BigRational::from_float(f) {
                return match back.cmp(q) {
                    core::cmp::Ordering::Equal => Interval::point(f),
                    core::cmp::Ordering::Less => Interval { lo: f, hi: f.next_up() },
                    core::cmp::Ordering::Greater => Interval { lo: f.next_down(), hi: f },
                };
            }
        }
        // out of range: unbounded on the overflowing side
        if f > 0.0 {
            Interval { lo: f64::MAX, hi: f64::INFINITY }
        } else {
            Interval { lo: f64::NEG_INFINITY, hi: f64::MIN }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.lo == 0.0 && self.hi == 0.0
    }

    pub fn is_bounded(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn contains_zero(&self) -> bool {
        self.contains(0.0)
    }

    pub fn subset_of(&self, o: &Interval) -> bool {
        o.lo <= self.lo && self.hi <= o.hi
    }

    /// Largest magnitude.
    pub fn mag(&self) -> f64 {
        libm::fmax(libm::fabs(self.lo), libm::fabs(self.hi))
    }

    pub fn ufp(&self) -> Ufp {
        if self.is_zero() {
            Ufp::Zero
        } else if !self.is_bounded() {
            Ufp::Unbounded
        } else {
            Ufp::Finite(ufp_f64(self.mag()).expect("non-zero finite"))
        }
    }

    pub fn join(&self, o: &Interval) -> Interval {
        Interval {
            lo: libm::fmin(self.lo, o.lo),
            hi: libm::fmax(self.hi, o.hi),
        }
    }

    pub fn meet(&self, o: &Interval) -> Option<Interval> {
        let lo = libm::fmax(self.lo, o.lo);
        let hi = libm::fmin(self.hi, o.hi);
        (lo <= hi).then_some(Interval { lo, hi })
    }

    pub fn add(&self, o: &Interval) -> Interval {
        Interval {
            lo: add_dir(self.lo, o.lo, false),
            hi: add_dir(self.hi, o.hi, true),
        }
    }

    pub fn neg(&self) -> Interval {
        Interval {
            lo: -self.hi,
            hi: -self.lo,
        }
    }

    pub fn sub(&self, o: &Interval) -> Interval {
        self.add(&o.neg())
    }

    pub fn mul(&self, o: &Interval) -> Interval {
        let (a, b) = (self, o);
        let cands = [(a.lo, b.lo), (a.lo, b.hi), (a.hi, b.lo), (a.hi, b.hi)];
        let lo = cands.iter().map(|&(x, y)| mul_dir(x, y, false)).fold(f64::INFINITY, libm::fmin);
        let hi = cands.iter().map(|&(x, y)| mul_dir(x, y, true)).fold(f64::NEG_INFINITY, libm::fmax);
        Interval { lo, hi }
    }

    /// `None` when the divisor contains zero.
    pub fn div(&self, o: &Interval) -> Option<Interval> {
        if o.contains_zero() {
            return None;
        }
        let (a, b) = (self, o);
        let cands = [(a.lo, b.lo), (a.lo, b.hi), (a.hi, b.lo), (a.hi, b.hi)];
        let lo = cands.iter().map(|&(x, y)| div_dir(x, y, false)).fold(f64::INFINITY, libm::fmin);
        let hi = cands.iter().map(|&(x, y)| div_dir(x, y, true)).fold(f64::NEG_INFINITY, libm::fmax);
        Some(Interval { lo, hi })
    }

    /// Square root of the non-negative part.
    pub fn sqrt(&self) -> Interval {
        let root = |x: f64, up: bool| -> f64 {
            if x <= 0.0 {
                return 0.0;
            }
            if x.is_infinite() {
                return x;
            }
            let s = libm::sqrt(x);
            let r = libm::fma(-s, s, x);
            if up && r > 0.0 {
                s.next_up()
            } else if !up && r < 0.0 {
                s.next_down()
            } else {
                s
            }
        };
        Interval {
            lo: root(libm::fmax(self.lo, 0.0), false),
            hi: root(self.hi, true),
        }
    }

    fn monotone(&self, f: fn(f64) -> f64, increasing: bool) -> Interval {
        let (a, b) = if increasing { (self.lo, self.hi) } else { (self.hi, self.lo) };
        Interval {
            lo: nudge(f(a), false),
            hi: nudge(f(b), true),
        }
    }

    /// Whether some `c + k*period` lies in the interval (with slack).
    fn hits(&self, c: f64, period: f64) -> bool {
        if !self.is_bounded() {
            return true;
        }
        let slack = 1e-12 * (1.0 + self.mag());
        let k = libm::ceil((self.lo - slack - c) / period);
        let x = c + k * period;
        x <= self.hi + slack
    }

    pub fn sin(&self) -> Interval {
        if !self.is_bounded() || self.hi - self.lo >= 2.0 * PI {
            return Interval { lo: -1.0, hi: 1.0 };
        }
        let (a, b) = (libm::sin(self.lo), libm::sin(self.hi));
        let mut lo = nudge(libm::fmin(a, b), false);
        let mut hi = nudge(libm::fmax(a, b), true);
        if self.hits(FRAC_PI_2, 2.0 * PI) {
            hi = 1.0;
        }
        if self.hits(-FRAC_PI_2, 2.0 * PI) {
            lo = -1.0;
        }
        Interval {
            lo: libm::fmax(lo, -1.0),
            hi: libm::fmin(hi, 1.0),
        }
    }

    pub fn cos(&self) -> Interval {
        if !self.is_bounded() || self.hi - self.lo >= 2.0 * PI {
            return Interval { lo: -1.0, hi: 1.0 };
        }
        let (a, b) = (libm::cos(self.lo), libm::cos(self.hi));
        let mut lo = nudge(libm::fmin(a, b), false);
        let mut hi = nudge(libm::fmax(a, b), true);
        if self.hits(0.0, 2.0 * PI) {
            hi = 1.0;
        }
        if self.hits(PI, 2.0 * PI) {
            lo = -1.0;
        }
        Interval {
            lo: libm::fmax(lo, -1.0),
            hi: libm::fmin(hi, 1.0),
        }
    }

    pub fn tan(&self) -> Interval {
        if !self.is_bounded() || self.hi - self.lo >= PI || self.hits(FRAC_PI_2, PI) {
            return Interval::ENTIRE;
        }
        self.monotone(libm::tan, true)
    }

    pub fn exp(&self) -> Interval {
        let r = self.monotone(libm::exp, true);
        Interval {
            lo: libm::fmax(r.lo, 0.0),
            hi: r.hi,
        }
    }

    pub fn atan(&self) -> Interval {
        let r = self.monotone(libm::atan, true);
        Interval {
            lo: libm::fmax(r.lo, -FRAC_PI_2.next_up()),
            hi: libm::fmin(r.hi, FRAC_PI_2.next_up()),
        }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:e}, {:e}]", self.lo, self.hi)
    }
}

// ---------------------------------------------------------------- analysis

type AEnv = BTreeMap<String, Interval>;

struct Analyzer<'a> {
    cfg: &'a RangeConfig,
    labels: Vec<Option<Interval>>,
    warnings: Vec<RangeWarning>,
}

fn join_env(a: &AEnv, b: &AEnv) -> AEnv {
    let mut out = a.clone();
    for (x, i) in b {
        out.entry(x.clone())
            .and_modify(|j| *j = j.join(i))
            .or_insert(*i);
    }
    out
}

impl<'a> Analyzer<'a> {
    fn record(&mut self, l: Label, i: Interval) {
        let slot = &mut self.labels[l];
        *slot = Some(match slot {
            Some(j) => j.join(&i),
            None => i,
        });
    }

    fn expr(&mut self, e: &Expr, env: &AEnv) -> Result<Interval, RangeError> {
        let i = match &e.kind {
            ExprKind::Const { value, .. } => Interval::from_rational(&value.value),
            ExprKind::Var(x) => *env.get(x).ok_or_else(|| RangeError::UseBeforeAssign {
                var: x.clone(),
                label: e.label,
            })?,
            ExprKind::Bin(op, a, b) => {
                let a = self.expr(a, env)?;
                let b = self.expr(b, env)?;
                match op {
                    BinOp::Add => a.add(&b),
                    BinOp::Sub => a.sub(&b),
                    BinOp::Mul => a.mul(&b),
                    BinOp::Div => a.div(&b).ok_or(RangeError::DivisionByZeroRange(e.label))?,
                }
            }
            ExprKind::Sqrt(a) => {
                let a = self.expr(a, env)?;
                if a.hi < 0.0 {
                    return Err(RangeError::DomainError {
                        label: e.label,
                        func: "sqrt",
                    });
                }
                if a.lo < 0.0 {
                    self.warnings.push(RangeWarning::DomainClipped { label: e.label });
                }
                a.sqrt()
            }
            ExprKind::Math(f, a) => {
                let a = self.expr(a, env)?;
                self.math(*f, a, e.label)?
            }
        };
        self.record(e.label, i);
        Ok(i)
    }

    fn math(&mut self, f: MathFn, a: Interval, label: Label) -> Result<Interval, RangeError> {
        let domain_err = || RangeError::DomainError {
            label,
            func: f.name(),
        };
        Ok(match f {
            MathFn::Sin => a.sin(),
            MathFn::Cos => a.cos(),
            MathFn::Tan => a.tan(),
            MathFn::Exp => a.exp(),
            MathFn::Arctan => a.atan(),
            MathFn::Log => {
                if a.hi <= 0.0 {
                    return Err(domain_err());
                }
                if a.lo <= 0.0 {
                    self.warnings.push(RangeWarning::DomainClipped { label });
                    Interval {
                        lo: f64::NEG_INFINITY,
                        hi: nudge(libm::log(a.hi), true),
                    }
                } else {
                    a.monotone(libm::log, true)
                }
            }
            MathFn::Arcsin | MathFn::Arccos => {
                let dom = Interval { lo: -1.0, hi: 1.0 };
                let c = a.meet(&dom).ok_or_else(domain_err)?;
                if !a.subset_of(&dom) {
                    self.warnings.push(RangeWarning::DomainClipped { label });
                }
                if f == MathFn::Arcsin {
                    let r = c.monotone(libm::asin, true);
                    Interval {
                        lo: libm::fmax(r.lo, -FRAC_PI_2.next_up()),
                        hi: libm::fmin(r.hi, FRAC_PI_2.next_up()),
                    }
                } else {
                    let r = c.monotone(libm::acos, false);
                    Interval {
                        lo: libm::fmax(r.lo, 0.0),
                        hi: libm::fmin(r.hi, PI.next_up()),
                    }
                }
            }
        })
    }

    /// Restricts `env` to states where `c` evaluates to `truth`; `None` when
    /// no state survives. Records the labels of compared expressions.
    fn refine(&mut self, c: &Cond, truth: bool, env: &AEnv) -> Result<Option<AEnv>, RangeError> {
        match &c.kind {
            CondKind::Not(inner) => self.refine(inner, !truth, env),
            CondKind::And(a, b) | CondKind::Or(a, b) => {
                let conj = matches!(c.kind, CondKind::And(..)) == truth;
                if conj {
                    match self.refine(a, truth, env)? {
                        Some(e1) => self.refine(b, truth, &e1),
                        None => {
                            // still visit the right operand for its labels
                            self.refine(b, truth, env)?;
                            Ok(None)
                        }
                    }
                } else {
                    let l = self.refine(a, truth, env)?;
                    let r = self.refine(b, truth, env)?;
                    Ok(match (l, r) {
                        (Some(x), Some(y)) => Some(join_env(&x, &y)),
                        (x, None) => x,
                        (None, y) => y,
                    })
                }
            }
            CondKind::Cmp(op, a, b) => {
                let ia = self.expr(a, env)?;
                let ib = self.expr(b, env)?;
                let op = if truth { *op } else { op.negate() };
                let mut out = env.clone();
                let mut feasible = true;
                let mut constrain = |e: &Expr, lo: f64, hi: f64| {
                    if let ExprKind::Var(x) = &e.kind {
                        if let Some(cur) = out.get(x).copied() {
                            match cur.meet(&Interval { lo, hi }) {
                                Some(m) => {
                                    out.insert(x.clone(), m);
                                }
                                None => feasible = false,
                            }
                        }
                    }
                };
                let (ninf, inf) = (f64::NEG_INFINITY, f64::INFINITY);
                // bounds are kept closed, which is sound for strict comparisons
                match op {
                    CmpOp::Lt | CmpOp::Le => {
                        constrain(a, ninf, ib.hi);
                        constrain(b, ia.lo, inf);
                    }
                    CmpOp::Gt | CmpOp::Ge => {
                        constrain(a, ib.lo, inf);
                        constrain(b, ninf, ia.hi);
                    }
                    CmpOp::Eq => {
                        constrain(a, ib.lo, ib.hi);
                        constrain(b, ia.lo, ia.hi);
                    }
                    CmpOp::Ne => {}
                }
                Ok(feasible.then_some(out))
            }
        }
    }

    fn cmd(&mut self, c: &Cmd, env: AEnv) -> Result<AEnv, RangeError> {
        match &c.kind {
            CmdKind::Seq(cs) => {
                let mut env = env;
                for c in cs {
                    env = self.cmd(c, env)?;
                }
                Ok(env)
            }
            CmdKind::Assign { var, expr } => {
                let i = self.expr(expr, &env)?;
                self.record(c.label, i);
                let mut env = env;
                env.insert(var.clone(), i);
                Ok(env)
            }
            CmdKind::Require { var, .. } => {
                if !env.contains_key(var) {
                    return Err(RangeError::UseBeforeAssign {
                        var: var.clone(),
                        label: c.label,
                    });
                }
                Ok(env)
            }
            CmdKind::If {
                cond,
                then_branch,
                else_branch,
            } => {
                let t = self.refine(cond, true, &env)?;
                let f = self.refine(cond, false, &env)?;
                let a = match t {
                    Some(e) => Some(self.cmd(then_branch, e)?),
                    None => None,
                };
                let b = match (f, else_branch) {
                    (Some(e), Some(eb)) => Some(self.cmd(eb, e)?),
                    (Some(e), None) => Some(e),
                    (None, _) => None,
                };
                Ok(match (a, b) {
                    (Some(x), Some(y)) => join_env(&x, &y),
                    (Some(x), None) => x,
                    (None, Some(y)) => y,
                    // both branches infeasible: keep the entry state
                    (None, None) => env,
                })
            }
            CmdKind::While { cond, body } => self.while_loop(c.label, cond, body, env),
        }
    }

    /// One application of the loop functional, `entry ⊔ body(cond ∧ head)`.
    fn step(&mut self, cond: &Cond, body: &Cmd, entry: &AEnv, head: &AEnv) -> Result<AEnv, RangeError> {
        Ok(match self.refine(cond, true, head)? {
            Some(inside) => {
                let out = self.cmd(body, inside)?;
                join_env(entry, &out)
            }
            None => entry.clone(),
        })
    }

    fn while_loop(&mut self, label: Label, cond: &Cond, body: &Cmd, entry: AEnv) -> Result<AEnv, RangeError> {
        let snapshot = self.labels.clone();
        let mut head = entry.clone();
        let mut iters = 0usize;
        let mut stage = 0u8; // 0 plain, 1 enclosures applied, 2 unbounded
        loop {
            let next = join_env(&head, &self.step(cond, body, &entry, &head)?);
            if next == head {
                break;
            }
            iters += 1;
            if iters < self.cfg.max_loop_iters {
                head = next;
                continue;
            }
            // widen the bounds that are still moving
            let moving: Vec<(String, Interval, Interval)> = next
                .iter()
                .filter_map(|(x, i)| match head.get(x) {
                    Some(p) if p == i => None,
                    Some(p) => Some((x.clone(), *p, *i)),
                    None => Some((x.clone(), *i, *i)),
                })
                .collect();
            head = next;
            for (x, prev, cur) in moving {
                let target = match (stage, self.cfg.enclosures.get(&x)) {
                    (0, Some(enc)) if cur.subset_of(enc) => *enc,
                    (0, Some(_)) | (1, Some(_)) => {
                        self.warnings.push(RangeWarning::EnclosureEscaped {
                            loop_label: label,
                            var: x.clone(),
                        });
                        Interval::ENTIRE
                    }
                    _ => Interval::ENTIRE,
                };
                let to = Interval {
                    lo: if cur.lo < prev.lo { libm::fmin(target.lo, cur.lo) } else { cur.lo },
                    hi: if cur.hi > prev.hi { libm::fmax(target.hi, cur.hi) } else { cur.hi },
                };
                self.warnings.push(RangeWarning::Widened {
                    loop_label: label,
                    var: x.clone(),
                    to,
                });
                head.insert(x, to);
            }
            stage = (stage + 1).min(2);
            iters = 0;
        }
        // narrowing: F(head) is again a post-fixpoint and may be tighter
        for _ in 0..self.cfg.max_loop_iters.min(8) {
            let next = self.step(cond, body, &entry, &head)?;
            if next == head {
                break;
            }
            head = next;
        }
        // final recording pass at the settled head
        self.labels = snapshot;
        let _ = self.step(cond, body, &entry, &head)?;
        Ok(self.refine(cond, false, &head)?.unwrap_or(head))
    }
}

/// Interval enclosure for every label of `prog`.
pub fn analyze_ranges(
    prog: &Program,
    inputs: &BTreeMap<String, Interval>,
    cfg: &RangeConfig,
) -> Result<RangeMap, RangeError> {
    for x in prog.free_vars() {
        if !inputs.contains_key(&x) {
            return Err(RangeError::MissingInput(x));
        }
    }
    for (x, i) in inputs {
        Interval::new(i.lo, i.hi).map_err(|_| RangeError::InvalidInterval { what: x.clone() })?;
    }
    let mut a = Analyzer {
        cfg,
        labels: alloc::vec![None; prog.n_labels],
        warnings: Vec::new(),
    };
    if let Some(body) = &prog.body {
        a.cmd(body, inputs.clone())?;
    }
    let kinds = prog.node_kinds();
    let mut warnings = a.warnings;
    let mut labels = Vec::with_capacity(prog.n_labels);
    let exact = exact_const_ufps(prog);
    for (l, k) in kinds.iter().enumerate() {
        labels.push(if !k.is_numeric() {
            LabelRange::NotNumeric
        } else {
            match a.labels[l] {
                None => {
                    warnings.push(RangeWarning::NeverExecuted { label: l });
                    LabelRange::Unreached
                }
                Some(interval) => LabelRange::Numeric {
                    interval,
                    ufp: exact.get(&l).copied().unwrap_or_else(|| interval.ufp()),
                },
            }
        });
    }
    Ok(RangeMap {
        labels,
        inputs: inputs.clone(),
        warnings,
    })
}

/// Constants get their ufp from the exact decimal value.
fn exact_const_ufps(prog: &Program) -> BTreeMap<Label, Ufp> {
    let mut out = BTreeMap::new();
    let mut visit = |e: &Expr| {
        e.walk(&mut |n| {
            if let ExprKind::Const { value, .. } = &n.kind {
                let u = match ufp_rational(&value.value) {
                    Ok(u) => Ufp::Finite(u),
                    Err(_) => Ufp::Zero,
                };
                out.insert(n.label, u);
            }
        })
    };
    if let Some(b) = &prog.body {
        b.walk(&mut |c| match &c.kind {
            CmdKind::Assign { expr, .. } => visit(expr),
            CmdKind::While { cond, .. } | CmdKind::If { cond, .. } => {
                cond.exprs().into_iter().for_each(&mut visit)
            }
            _ => {}
        });
    }
    out
}

impl RangeMap {
    pub fn ufp(&self, l: Label) -> Option<Ufp> {
        match self.labels.get(l)? {
            LabelRange::Numeric { ufp, .. } => Some(*ufp),
            _ => None,
        }
    }

    pub fn interval(&self, l: Label) -> Option<Interval> {
        match self.labels.get(l)? {
            LabelRange::Numeric { interval, .. } => Some(*interval),
            _ => None,
        }
    }

    /// Overrides the ufp at `l`; the interval becomes a symmetric enclosure
    /// of the new magnitude unless the label already had one.
    pub fn set_ufp(&mut self, l: Label, u: Ufp) {
        let interval = match (self.labels.get(l), u) {
            (_, Ufp::Zero) => Interval::point(0.0),
            (Some(LabelRange::Numeric { interval, .. }), _) if interval.ufp() == u => *interval,
            (_, Ufp::Finite(k)) => {
                let m = libm::ldexp(1.0, (k + 1) as i32);
                Interval { lo: -m, hi: m }
            }
            (_, Ufp::Unbounded) => Interval::ENTIRE,
        };
        self.labels[l] = LabelRange::Numeric { interval, ufp: u };
    }

    /// Every label whose ufp enters a constraint must be finite or zero:
    /// operands and results of additive operators, and of all binary
    /// operators when carry sites are generated.
    pub fn check_arithmetic(&self, prog: &Program, with_carry_sites: bool) -> Result<(), RangeError> {
        let mut needed = BTreeSet::new();
        let mut visit = |e: &Expr| {
            e.walk(&mut |n| {
                if let ExprKind::Bin(op, a, b) = &n.kind {
                    if with_carry_sites || matches!(op, BinOp::Add | BinOp::Sub) {
                        needed.insert(n.label);
                        needed.insert(a.label);
                        needed.insert(b.label);
                    }
                }
            })
        };
        if let Some(b) = &prog.body {
            b.walk(&mut |c| {
                if let CmdKind::Assign { expr, .. } = &c.kind {
                    visit(expr);
                }
            });
        }
        for l in needed {
            if self.ufp(l) == Some(Ufp::Unbounded) {
                return Err(RangeError::UnboundedRange(l));
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------- ufp table

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TableError {
    UnknownLabel { line: usize, key: String },
    MalformedTable { line: usize, reason: String },
}

impl fmt::Display for TableError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TableError::UnknownLabel { line, key } => {
                write!(f, "ufp table line {}: no numeric label matches {:?}", line, key)
            }
            TableError::MalformedTable { line, reason } => {
                write!(f, "ufp table line {}: {}", line, reason)
            }
        }
    }
}

/// Parsed label to ufp overrides.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct UfpTable {
    pub entries: Vec<(Label, Ufp)>,
}

impl UfpTable {
    /// Tab- or space-separated lines `key ufp [comment...]`. A key is a label
    /// number (`17` or `l17`) or `token@k`, the k-th labelled occurrence of an
    /// identifier, operator or function name in source order. The value is an
    /// integer or `zero`. `#` starts a comment line.
    pub fn parse(text: &str, prog: &Program) -> Result<UfpTable, TableError> {
        let kinds = prog.node_kinds();
        let mut entries = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let s = raw.trim();
            if s.is_empty() || s.starts_with('#') {
                continue;
            }
            let mut parts = s.split_whitespace();
            let key = parts.next().unwrap();
            let val = parts.next().ok_or_else(|| TableError::MalformedTable {
                line,
                reason: "missing ufp value".to_string(),
            })?;
            let label = resolve_key(key, prog).ok_or_else(|| TableError::UnknownLabel {
                line,
                key: key.to_string(),
            })?;
            if !kinds.get(label).is_some_and(NodeKind::is_numeric) {
                return Err(TableError::UnknownLabel {
                    line,
                    key: key.to_string(),
                });
            }
            let u = if val.eq_ignore_ascii_case("zero") {
                Ufp::Zero
            } else {
                Ufp::Finite(val.parse::<i64>().map_err(|_| TableError::MalformedTable {
                    line,
                    reason: alloc::format!("bad ufp value {:?}", val),
                })?)
            };
            entries.push((label, u));
        }
        Ok(UfpTable { entries })
    }

    pub fn apply(&self, map: &mut RangeMap) {
        for &(l, u) in &self.entries {
            map.set_ufp(l, u);
        }
    }
}

fn resolve_key(key: &str, prog: &Program) -> Option<Label> {
    let digits = key.strip_prefix('l').unwrap_or(key);
    if let Ok(n) = digits.parse::<usize>() {
        return (n < prog.n_labels).then_some(n);
    }
    let (tok, k) = key.rsplit_once('@')?;
    find_occurrence(prog, tok, k.parse().ok()?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse;

    fn iv(lo: f64, hi: f64) -> Interval {
        Interval::new(lo, hi).unwrap()
    }

    #[test]
    fn exact_sums_stay_points() {
        assert_eq!(iv(5.0, 5.0).add(&iv(3.0, 3.0)), iv(8.0, 8.0));
        let s = iv(0.1, 0.1).add(&iv(0.2, 0.2));
        assert!(s.lo < s.hi && s.contains(0.30000000000000004));
    }

    #[test]
    fn products_and_quotients_are_outward() {
        let p = iv(0.1, 0.1).mul(&iv(3.0, 3.0));
        assert!(p.lo < p.hi);
        assert_eq!(iv(1.0, 2.0).mul(&iv(-3.0, 4.0)), iv(-6.0, 8.0));
        let q = iv(1.0, 1.0).div(&iv(3.0, 3.0)).unwrap();
        assert!(q.lo < 1.0 / 3.0 || q.hi > 1.0 / 3.0);
        assert!(q.hi - q.lo <= 2.0 * f64::EPSILON);
        assert!(iv(1.0, 1.0).div(&iv(-1.0, 1.0)).is_none());
        assert_eq!(iv(4.0, 9.0).sqrt(), iv(2.0, 3.0));
    }

    #[test]
    fn sin_over_symmetric_unit() {
        let s = iv(-1.0, 1.0).sin();
        let s1 = libm::sin(1.0);
        assert!(s.lo <= -s1 && s.hi >= s1);
        assert!(s.hi - s1 < 1e-15);
        assert_eq!(s.ufp(), Ufp::Finite(-1));
        let c = iv(-0.5, 0.5).cos();
        assert_eq!(c.hi, 1.0);
        let t = iv(1.0, 2.0).tan();
        assert_eq!(t, Interval::ENTIRE);
    }

    #[test]
    fn constant_and_sum() {
        let p = parse("g = 9.81; x = 5.0; y = 3.0; z = x + y;").unwrap();
        let m = analyze_ranges(&p, &BTreeMap::new(), &RangeConfig::default()).unwrap();
        assert_eq!(m.ufp(0), Some(Ufp::Finite(3)));
        let plus = p.node_kinds().iter().position(|k| *k == NodeKind::Bin(BinOp::Add)).unwrap();
        assert_eq!(m.interval(plus), Some(iv(8.0, 8.0)));
        assert_eq!(m.ufp(plus), Some(Ufp::Finite(3)));
        assert_eq!(m.labels.last(), Some(&LabelRange::NotNumeric));
    }

    #[test]
    fn exact_constant_ufp_near_power_of_two() {
        // rounds to 1.0 as a double but is below it
        let p = parse("x = 0.99999999999999999999;").unwrap();
        let m = analyze_ranges(&p, &BTreeMap::new(), &RangeConfig::default()).unwrap();
        assert_eq!(m.ufp(0), Some(Ufp::Finite(-1)));
    }

    #[test]
    fn zero_marker_and_errors() {
        let p = parse("x = 0.0; y = 1.0 / x;").unwrap();
        let e = analyze_ranges(&p, &BTreeMap::new(), &RangeConfig::default()).unwrap_err();
        assert!(matches!(e, RangeError::DivisionByZeroRange(_)));
        let p = parse("x = 0.0 * 3.0;").unwrap();
        let m = analyze_ranges(&p, &BTreeMap::new(), &RangeConfig::default()).unwrap();
        assert_eq!(m.ufp(3), Some(Ufp::Zero));
        let p = parse("y = sqrt(x);").unwrap();
        let mut inp = BTreeMap::new();
        inp.insert("x".to_string(), iv(-3.0, -1.0));
        let e = analyze_ranges(&p, &inp, &RangeConfig::default()).unwrap_err();
        assert!(matches!(e, RangeError::DomainError { func: "sqrt", .. }));
        let e = analyze_ranges(&p, &BTreeMap::new(), &RangeConfig::default()).unwrap_err();
        assert_eq!(e, RangeError::MissingInput("x".into()));
    }

    #[test]
    fn counted_loop_settles_with_guard() {
        let p = parse("t = 0.0; while (t < 10.0) { t = t + 0.1; }").unwrap();
        let m = analyze_ranges(&p, &BTreeMap::new(), &RangeConfig::default()).unwrap();
        let kinds = p.node_kinds();
        let assign_in_body = kinds
            .iter()
            .enumerate()
            .filter(|(_, k)| **k == NodeKind::Assign("t".into()))
            .map(|(l, _)| l)
            .nth(1)
            .unwrap();
        let i = m.interval(assign_in_body).unwrap();
        assert!(i.hi <= 10.2 && i.lo >= 0.0, "{}", i);
    }

    #[test]
    fn divergent_loop_uses_enclosure_or_warns() {
        let src = "y = 1.0; while (y < 1000.0) { y = y * 2.0 + 1.0; }";
        let p = parse(src).unwrap();
        let mut cfg = RangeConfig {
            max_loop_iters: 4,
            ..Default::default()
        };
        let m = analyze_ranges(&p, &BTreeMap::new(), &cfg).unwrap();
        assert!(m.warnings.iter().any(|w| matches!(w, RangeWarning::Widened { .. })));
        cfg.enclosures.insert("y".into(), iv(0.0, 1.0));
        let m = analyze_ranges(&p, &BTreeMap::new(), &cfg).unwrap();
        assert!(m.warnings.iter().any(|w| matches!(w, RangeWarning::EnclosureEscaped { .. })));
    }

    #[test]
    fn infeasible_branch_is_reported() {
        let p = parse("x = 2.0; if (x < 1.0) { y = x + 1.0; } else { y = x; }").unwrap();
        let m = analyze_ranges(&p, &BTreeMap::new(), &RangeConfig::default()).unwrap();
        assert!(m.labels.contains(&LabelRange::Unreached));
        assert!(m.warnings.iter().any(|w| matches!(w, RangeWarning::NeverExecuted { .. })));
    }

    #[test]
    fn table_parsing() {
        let p = parse("y1 = 0.785398; z = y1 + y1;").unwrap();
        let t = UfpTable::parse("# c\n1\t-1\tpinned l17\ny1@2 -1\n+@1 zero\n", &p).unwrap();
        assert_eq!(t.entries, [(1, Ufp::Finite(-1)), (2, Ufp::Finite(-1)), (4, Ufp::Zero)]);
        assert!(matches!(
            UfpTable::parse("99 1", &p),
            Err(TableError::UnknownLabel { line: 1, .. })
        ));
        assert!(matches!(
            UfpTable::parse("1 x", &p),
            Err(TableError::MalformedTable { line: 1, .. })
        ));
        assert_eq!(UfpTable::parse("", &p).unwrap().entries, []);
    }
}
