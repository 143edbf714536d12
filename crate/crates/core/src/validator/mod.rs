//! Shadow execution of a tuned program against a high-precision reference.
//!
//! The tuned run rounds the value of every labelled node to the `nsb` the
//! solver gave that label; the reference run rounds everything at a much
//! larger precision. Relative errors are compared at `require_nsb` points.

mod bigfloat;
mod elementary;
mod error_model;

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

pub use bigfloat::BigFloat;
pub use elementary::{ln2, pi, Elementary, MathError};
pub use error_model::{check_error_model, operand_error, ErrOp};

use crate::constraints::{ConstraintSystem, VarKind};
use crate::frontend::{BinOp, Cmd, CmdKind, CmpOp, Cond, CondKind, Expr, ExprKind, Label, NodeKind, Program, Site};
use crate::range::{Interval, LabelRange, RangeMap, Ufp};

/// Where the tuned run rounds.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rounding {
    /// after every labelled node, at that label's `nsb`
    PerLabel,
    /// constants and inputs only; operations run at the reference precision
    SourcesOnly,
}

#[derive(Clone, Debug)]
pub struct InterpConfig {
    pub ref_bits: u64,
    /// loop iterations allowed per run
    pub step_limit: u64,
    pub rounding: Rounding,
}

impl Default for InterpConfig {
    fn default() -> InterpConfig {
        InterpConfig {
            ref_bits: 500,
            step_limit: 1_000_000,
            rounding: Rounding::PerLabel,
        }
    }
}

/// `nsb` per label and per input variable.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Precisions {
    pub labels: BTreeMap<Label, i64>,
    pub inputs: BTreeMap<String, i64>,
}

impl Precisions {
    /// The `nsb` part of a solution of `sys`.
    pub fn from_solution(sys: &ConstraintSystem, x: &[i64]) -> Precisions {
        let mut p = Precisions::default();
        for (v, k) in sys.vars.iter().enumerate() {
            match k {
                VarKind::Nsb(Site::Label(l)) => {
                    p.labels.insert(*l, x[v]);
                }
                VarKind::Nsb(Site::Input(i)) => {
                    p.inputs.insert(sys.inputs[*i].clone(), x[v]);
                }
                VarKind::NsbE(_) => {}
            }
        }
        p
    }

    pub fn max(&self) -> i64 {
        self.labels.values().chain(self.inputs.values()).copied().max().unwrap_or(0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ValidateError {
    MissingInput(String),
    InputOutOfRange { var: String },
    UseBeforeAssign { var: String, label: Label },
    MissingPrecision(Label),
    DivisionByZero(Label),
    Domain(Label),
    Overflow(Label),
    NonTermination { steps: u64 },
    /// the reference must be far more precise than anything it checks
    RefBitsTooLow { ref_bits: u64, needed: u64 },
}

impl fmt::Display for ValidateError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValidateError::MissingInput(x) => write!(f, "no value for input {}", x),
            ValidateError::InputOutOfRange { var } => write!(f, "input {} outside its analysed range", var),
            ValidateError::UseBeforeAssign { var, label } => {
                write!(f, "l{}: {} read before assignment", label, var)
            }
            ValidateError::MissingPrecision(l) => write!(f, "no nsb for l{}", l),
            ValidateError::DivisionByZero(l) => write!(f, "l{}: division by zero", l),
            ValidateError::Domain(l) => write!(f, "l{}: argument outside the function's domain", l),
            ValidateError::Overflow(l) => write!(f, "l{}: result out of range", l),
            ValidateError::NonTermination { steps } => write!(f, "no termination after {} loop steps", steps),
            ValidateError::RefBitsTooLow { ref_bits, needed } => {
                write!(f, "reference precision {} below the required {}", ref_bits, needed)
            }
        }
    }
}

/// Values seen at each `require_nsb`, in execution order, and every branch
/// decision taken.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Run {
    pub records: BTreeMap<Label, Vec<BigFloat>>,
    pub decisions: Vec<bool>,
}

enum Mode<'a> {
    Reference,
    Tuned(&'a Precisions, Rounding),
}

struct Machine<'a> {
    mode: Mode<'a>,
    cfg: &'a InterpConfig,
    elem: &'a Elementary,
    steps: u64,
    /// evaluating a condition: its labels carry no accuracy demand, so
    /// comparisons see the stored values unrounded
    in_cond: bool,
    run: Run,
}

impl Machine<'_> {
    fn label_prec(&self, l: Label) -> Result<u64, ValidateError> {
        if self.in_cond {
            return Ok(self.cfg.ref_bits);
        }
        match self.mode {
            Mode::Reference => Ok(self.cfg.ref_bits),
            Mode::Tuned(p, _) => p
                .labels
                .get(&l)
                .map(|&n| (n.max(1) as u64).min(self.cfg.ref_bits))
                .ok_or(ValidateError::MissingPrecision(l)),
        }
    }

    /// Precision of an operation result or a stored value.
    fn op_prec(&self, l: Label) -> Result<u64, ValidateError> {
        match self.mode {
            Mode::Tuned(_, Rounding::SourcesOnly) => Ok(self.cfg.ref_bits),
            _ => self.label_prec(l),
        }
    }

    fn expr(&mut self, e: &Expr, env: &BTreeMap<String, BigFloat>) -> Result<BigFloat, ValidateError> {
        let l = e.label;
        Ok(match &e.kind {
            ExprKind::Const { value, .. } => BigFloat::from_rational(&value.value, self.label_prec(l)?),
            ExprKind::Var(x) => env
                .get(x)
                .ok_or_else(|| ValidateError::UseBeforeAssign {
                    var: x.clone(),
                    label: l,
                })?
                .round(self.op_prec(l)?),
            ExprKind::Bin(op, a, b) => {
                let (x, y) = (self.expr(a, env)?, self.expr(b, env)?);
                let p = self.op_prec(l)?;
                match op {
                    BinOp::Add => x.add(&y).round(p),
                    BinOp::Sub => x.sub(&y).round(p),
                    BinOp::Mul => x.mul(&y).round(p),
                    BinOp::Div => x.div(&y, p).ok_or(ValidateError::DivisionByZero(l))?,
                }
            }
            ExprKind::Math(f, a) => {
                let x = self.expr(a, env)?;
                let v = self.elem.eval(*f, &x).map_err(|err| match err {
                    MathError::Domain => ValidateError::Domain(l),
                    MathError::Overflow => ValidateError::Overflow(l),
                })?;
                v.round(self.op_prec(l)?)
            }
            ExprKind::Sqrt(a) => {
                let x = self.expr(a, env)?;
                x.sqrt(self.op_prec(l)?).ok_or(ValidateError::Domain(l))?
            }
        })
    }

    fn cond(&mut self, c: &Cond, env: &BTreeMap<String, BigFloat>) -> Result<bool, ValidateError> {
        Ok(match &c.kind {
            CondKind::Cmp(op, a, b) => {
                let (x, y) = (self.expr(a, env)?, self.expr(b, env)?);
                match op {
                    CmpOp::Lt => x < y,
                    CmpOp::Le => x <= y,
                    CmpOp::Gt => x > y,
                    CmpOp::Ge => x >= y,
                    CmpOp::Eq => x == y,
                    CmpOp::Ne => x != y,
                }
            }
            CondKind::And(a, b) => self.cond(a, env)? && self.cond(b, env)?,
            CondKind::Or(a, b) => self.cond(a, env)? || self.cond(b, env)?,
            CondKind::Not(a) => !self.cond(a, env)?,
        })
    }

    fn decide(&mut self, c: &Cond, env: &BTreeMap<String, BigFloat>) -> Result<bool, ValidateError> {
        self.in_cond = true;
        let b = self.cond(c, env);
        self.in_cond = false;
        let b = b?;
        self.run.decisions.push(b);
        Ok(b)
    }

    fn cmd(&mut self, c: &Cmd, env: &mut BTreeMap<String, BigFloat>) -> Result<(), ValidateError> {
        match &c.kind {
            CmdKind::Seq(cs) => {
                for c in cs {
                    self.cmd(c, env)?;
                }
            }
            CmdKind::Assign { var, expr } => {
                let v = self.expr(expr, env)?.round(self.op_prec(c.label)?);
                env.insert(var.clone(), v);
            }
            CmdKind::If {
                cond,
                then_branch,
                else_branch,
            } => {
                if self.decide(cond, env)? {
                    self.cmd(then_branch, env)?;
                } else if let Some(e) = else_branch {
                    self.cmd(e, env)?;
                }
            }
            CmdKind::While { cond, body } => {
                while self.decide(cond, env)? {
                    self.steps += 1;
                    if self.steps > self.cfg.step_limit {
                        return Err(ValidateError::NonTermination { steps: self.steps });
                    }
                    self.cmd(body, env)?;
                }
            }
            CmdKind::Require { var, .. } => {
                let v = env.get(var).ok_or_else(|| ValidateError::UseBeforeAssign {
                    var: var.clone(),
                    label: c.label,
                })?;
                self.run.records.entry(c.label).or_default().push(v.clone());
            }
        }
        Ok(())
    }
}

/// Runs `prog` once. `precisions` of `None` is the reference run.
pub fn execute(
    prog: &Program,
    inputs: &BTreeMap<String, BigFloat>,
    precisions: Option<(&Precisions, Rounding)>,
    elem: &Elementary,
    cfg: &InterpConfig,
) -> Result<Run, ValidateError> {
    let mut env = BTreeMap::new();
    for x in prog.free_vars() {
        let v = inputs.get(&x).ok_or_else(|| ValidateError::MissingInput(x.clone()))?;
        let p = match precisions {
            None => cfg.ref_bits,
            Some((p, _)) => p.inputs.get(&x).map_or(cfg.ref_bits, |&n| (n.max(1) as u64).min(cfg.ref_bits)),
        };
        env.insert(x, v.round(p));
    }
    let mut m = Machine {
        mode: match precisions {
            None => Mode::Reference,
            Some((p, r)) => Mode::Tuned(p, r),
        },
        cfg,
        elem,
        steps: 0,
        in_cond: false,
        run: Run::default(),
    };
    if let Some(body) = &prog.body {
        m.cmd(body, &mut env)?;
    }
    Ok(m.run)
}

#[derive(Clone, Debug, PartialEq)]
pub struct PointResult {
    pub label: Label,
    pub var: String,
    pub nsb: u32,
    /// worst execution of this point
    pub reference: BigFloat,
    pub tuned: BigFloat,
    /// relative error, or absolute error when the reference is zero
    pub error: f64,
    pub zero_reference: bool,
    pub pass: bool,
    /// executions compared
    pub executions: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SampleReport {
    pub index: usize,
    pub inputs: BTreeMap<String, f64>,
    pub points: Vec<PointResult>,
    /// the two runs took different branches or reached a point a different
    /// number of times
    pub diverged: bool,
}

impl SampleReport {
    pub fn pass(&self) -> bool {
        self.points.iter().all(|p| p.pass)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport {
    pub samples: Vec<SampleReport>,
}

impl ValidationReport {
    pub fn pass(&self) -> bool {
        self.samples.iter().all(SampleReport::pass)
    }

    pub fn failures(&self) -> usize {
        self.samples.iter().filter(|s| !s.pass()).count()
    }

    /// Largest error seen at each requirement.
    pub fn worst(&self) -> BTreeMap<Label, f64> {
        let mut w: BTreeMap<Label, f64> = BTreeMap::new();
        for p in self.samples.iter().flat_map(|s| &s.points) {
            let e = w.entry(p.label).or_insert(0.0);
            *e = e.max(p.error);
        }
        w
    }
}

/// `|t - r| < 2^-n |r|`, or `|t| < 2^(u-n)` when `r = 0`, decided exactly.
fn within(r: &BigFloat, t: &BigFloat, n: u32, zero_ufp: i64) -> (bool, f64) {
    let diff = t.sub(r).abs();
    if r.is_zero() {
        let bound = BigFloat::pow2(zero_ufp - n as i64);
        return (diff < bound, diff.to_f64());
    }
    let rel = diff.div(&r.abs(), 64).unwrap().to_f64();
    (diff.mul_pow2(n as i64) < r.abs(), rel)
}

/// The largest analysed ufp of a variable, used to judge errors where the
/// reference value is exactly zero; 0 when nothing is known.
pub fn requirement_ufps(prog: &Program, ranges: &RangeMap) -> BTreeMap<Label, i64> {
    let kinds = prog.node_kinds();
    prog.requirements()
        .into_iter()
        .map(|(l, x, _)| {
            let from_labels = kinds.iter().enumerate().filter_map(|(a, k)| match k {
                NodeKind::Assign(y) | NodeKind::Var(y) if *y == x => match ranges.labels.get(a) {
                    Some(LabelRange::Numeric { ufp: Ufp::Finite(u), .. }) => Some(*u),
                    _ => None,
                },
                _ => None,
            });
            let from_input = ranges
                .inputs
                .get(&x)
                .filter(|i| !i.is_zero())
                .and_then(|i| crate::ufp::ufp_f64(i.mag()).ok());
            (l, from_labels.chain(from_input).max().unwrap_or(0))
        })
        .collect()
}

/// Checks every input against its analysed interval.
pub fn check_inputs(inputs: &BTreeMap<String, BigFloat>, ranges: &BTreeMap<String, Interval>) -> Result<(), ValidateError> {
    for (x, v) in inputs {
        if let Some(i) = ranges.get(x) {
            let f = v.to_f64();
            if !(i.lo <= f && f <= i.hi) {
                return Err(ValidateError::InputOutOfRange { var: x.clone() });
            }
        }
    }
    Ok(())
}

/// Reference and tuned runs on one input, compared at every requirement.
pub fn validate_sample(
    prog: &Program,
    precisions: &Precisions,
    inputs: &BTreeMap<String, BigFloat>,
    zero_ufps: &BTreeMap<Label, i64>,
    elem: &Elementary,
    cfg: &InterpConfig,
    index: usize,
) -> Result<SampleReport, ValidateError> {
    let needed = 4 * precisions.max().max(0) as u64;
    if cfg.ref_bits < needed || elem.precision() < cfg.ref_bits {
        return Err(ValidateError::RefBitsTooLow {
            ref_bits: cfg.ref_bits.min(elem.precision()),
            needed,
        });
    }
    let reference = execute(prog, inputs, None, elem, cfg)?;
    let tuned = execute(prog, inputs, Some((precisions, cfg.rounding)), elem, cfg)?;
    let mut diverged = reference.decisions != tuned.decisions;
    let mut points = Vec::new();
    for (l, x, n) in prog.requirements() {
        let empty = Vec::new();
        let rs = reference.records.get(&l).unwrap_or(&empty);
        let ts = tuned.records.get(&l).unwrap_or(&empty);
        diverged |= rs.len() != ts.len();
        let zu = zero_ufps.get(&l).copied().unwrap_or(0);
        let mut worst: Option<PointResult> = None;
        for (r, t) in rs.iter().zip(ts) {
            let (pass, error) = within(r, t, n, zu);
            let better = worst.as_ref().is_some_and(|w| (w.pass, -w.error) <= (pass, -error));
            if !better {
                worst = Some(PointResult {
                    label: l,
                    var: x.clone(),
                    nsb: n,
                    reference: r.clone(),
                    tuned: t.clone(),
                    error,
                    zero_reference: r.is_zero(),
                    pass,
                    executions: rs.len().min(ts.len()),
                });
            }
        }
        points.extend(worst);
    }
    Ok(SampleReport {
        index,
        inputs: inputs.iter().map(|(k, v)| (k.clone(), v.to_f64())).collect(),
        points,
        diverged,
    })
}
