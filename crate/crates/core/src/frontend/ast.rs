use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use num_rational::BigRational;

/// Control point. Dense `0..n_labels`, assigned in post-order.
pub type Label = usize;

/// Default significand width of a literal without `#p`.
pub const DEFAULT_CONST_PREC: u32 = 53;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Decimal {
    /// Source spelling, sign included.
    pub text: String,
    pub value: BigRational,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
        }
    }

    pub(crate) fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MathFn {
    Sin,
    Cos,
    Tan,
    Arcsin,
    Arccos,
    Arctan,
    Log,
    Exp,
}

impl MathFn {
    pub const ALL: [MathFn; 8] = [
        MathFn::Sin,
        MathFn::Cos,
        MathFn::Tan,
        MathFn::Arcsin,
        MathFn::Arccos,
        MathFn::Arctan,
        MathFn::Log,
        MathFn::Exp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MathFn::Sin => "sin",
            MathFn::Cos => "cos",
            MathFn::Tan => "tan",
            MathFn::Arcsin => "arcsin",
            MathFn::Arccos => "arccos",
            MathFn::Arctan => "arctan",
            MathFn::Log => "log",
            MathFn::Exp => "exp",
        }
    }

    pub fn from_name(s: &str) -> Option<MathFn> {
        MathFn::ALL.iter().copied().find(|f| f.name() == s)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Expr {
    pub label: Label,
    pub kind: ExprKind,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ExprKind {
    Const {
        value: Decimal,
        prec: u32,
        /// `#p` written in the source
        explicit_prec: bool,
    },
    Var(String),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Math(MathFn, Box<Expr>),
    Sqrt(Box<Expr>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CmpOp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
        }
    }

    pub fn negate(self) -> CmpOp {
        match self {
            CmpOp::Lt => CmpOp::Ge,
            CmpOp::Le => CmpOp::Gt,
            CmpOp::Gt => CmpOp::Le,
            CmpOp::Ge => CmpOp::Lt,
            CmpOp::Eq => CmpOp::Ne,
            CmpOp::Ne => CmpOp::Eq,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cond {
    pub label: Label,
    pub kind: CondKind,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CondKind {
    Cmp(CmpOp, Expr, Expr),
    And(Box<Cond>, Box<Cond>),
    Or(Box<Cond>, Box<Cond>),
    Not(Box<Cond>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cmd {
    pub label: Label,
    pub kind: CmdKind,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CmdKind {
    /// One labelled node for a whole block.
    Seq(Vec<Cmd>),
    Assign { var: String, expr: Expr },
    While { cond: Cond, body: Box<Cmd> },
    If {
        cond: Cond,
        then_branch: Box<Cmd>,
        else_branch: Option<Box<Cmd>>,
    },
    Require { var: String, nsb: u32 },
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Program {
    pub body: Option<Cmd>,
    pub n_labels: usize,
}

/// What sits at a label, flattened.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NodeKind {
    Const,
    Var(String),
    Bin(BinOp),
    Math(MathFn),
    Sqrt,
    Cond,
    Seq,
    Assign(String),
    While,
    If,
    Require(String, u32),
}

impl NodeKind {
    /// Nodes that carry a numeric value and an `nsb`.
    pub fn is_numeric(&self) -> bool {
        !matches!(
            self,
            NodeKind::Cond | NodeKind::Seq | NodeKind::While | NodeKind::If | NodeKind::Require(..)
        )
    }

    pub fn tag(&self) -> &'static str {
        match self {
            NodeKind::Const => "const",
            NodeKind::Var(_) => "var",
            NodeKind::Bin(_) => "binop",
            NodeKind::Math(_) => "math",
            NodeKind::Sqrt => "sqrt",
            NodeKind::Cond => "cond",
            NodeKind::Seq => "seq",
            NodeKind::Assign(_) => "assign",
            NodeKind::While => "while",
            NodeKind::If => "if",
            NodeKind::Require(..) => "require_nsb",
        }
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeKind::Var(x) => write!(f, "var {}", x),
            NodeKind::Bin(op) => write!(f, "op {}", op.symbol()),
            NodeKind::Math(m) => write!(f, "{}", m.name()),
            NodeKind::Assign(x) => write!(f, "{} =", x),
            NodeKind::Require(x, n) => write!(f, "require_nsb({},{})", x, n),
            k => f.write_str(k.tag()),
        }
    }
}

impl Expr {
    pub fn children(&self) -> Vec<&Expr> {
        match &self.kind {
            ExprKind::Const { .. } | ExprKind::Var(_) => Vec::new(),
            ExprKind::Bin(_, a, b) => alloc::vec![&**a, &**b],
            ExprKind::Math(_, a) | ExprKind::Sqrt(a) => alloc::vec![&**a],
        }
    }

    pub fn node_kind(&self) -> NodeKind {
        match &self.kind {
            ExprKind::Const { .. } => NodeKind::Const,
            ExprKind::Var(x) => NodeKind::Var(x.clone()),
            ExprKind::Bin(op, ..) => NodeKind::Bin(*op),
            ExprKind::Math(m, _) => NodeKind::Math(*m),
            ExprKind::Sqrt(_) => NodeKind::Sqrt,
        }
    }

    /// Pre-order walk.
    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a Expr)) {
        f(self);
        for c in self.children() {
            c.walk(f);
        }
    }

    pub fn size(&self) -> usize {
        1 + self.children().iter().map(|c| c.size()).sum::<usize>()
    }

    pub fn depth(&self) -> usize {
        1 + self.children().iter().map(|c| c.depth()).max().unwrap_or(0)
    }
}

impl Cond {
    /// Expressions compared by this condition, left to right.
    pub fn exprs(&self) -> Vec<&Expr> {
        match &self.kind {
            CondKind::Cmp(_, a, b) => alloc::vec![a, b],
            CondKind::And(a, b) | CondKind::Or(a, b) => {
                let mut v = a.exprs();
                v.extend(b.exprs());
                v
            }
            CondKind::Not(a) => a.exprs(),
        }
    }

    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a Cond)) {
        f(self);
        match &self.kind {
            CondKind::Cmp(..) => {}
            CondKind::And(a, b) | CondKind::Or(a, b) => {
                a.walk(f);
                b.walk(f);
            }
            CondKind::Not(a) => a.walk(f),
        }
    }
}

impl Cmd {
    /// Pre-order walk over commands.
    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a Cmd)) {
        f(self);
        match &self.kind {
            CmdKind::Seq(cs) => cs.iter().for_each(|c| c.walk(f)),
            CmdKind::While { body, .. } => body.walk(f),
            CmdKind::If {
                then_branch,
                else_branch,
                ..
            } => {
                then_branch.walk(f);
                if let Some(e) = else_branch {
                    e.walk(f);
                }
            }
            CmdKind::Assign { .. } | CmdKind::Require { .. } => {}
        }
    }
}

impl Program {
    /// Node kind per label.
    pub fn node_kinds(&self) -> Vec<NodeKind> {
        let mut kinds: Vec<Option<NodeKind>> = alloc::vec![None; self.n_labels];
        if let Some(body) = &self.body {
            body.walk(&mut |c| {
                let k = match &c.kind {
                    CmdKind::Seq(_) => NodeKind::Seq,
                    CmdKind::Assign { var, expr } => {
                        expr.walk(&mut |e| kinds[e.label] = Some(e.node_kind()));
                        NodeKind::Assign(var.clone())
                    }
                    CmdKind::While { cond, .. } | CmdKind::If { cond, .. } => {
                        cond.walk(&mut |b| kinds[b.label] = Some(NodeKind::Cond));
                        for e in cond.exprs() {
                            e.walk(&mut |e| kinds[e.label] = Some(e.node_kind()));
                        }
                        if matches!(c.kind, CmdKind::While { .. }) {
                            NodeKind::While
                        } else {
                            NodeKind::If
                        }
                    }
                    CmdKind::Require { var, nsb } => NodeKind::Require(var.clone(), *nsb),
                };
                kinds[c.label] = Some(k);
            });
        }
        kinds
            .into_iter()
            .map(|k| k.expect("labels are dense"))
            .collect()
    }

    /// Labels of assignment commands, in label order.
    pub fn assignment_labels(&self) -> Vec<Label> {
        self.node_kinds()
            .iter()
            .enumerate()
            .filter(|(_, k)| matches!(k, NodeKind::Assign(_)))
            .map(|(l, _)| l)
            .collect()
    }

    /// Variables read somewhere before any assignment may have reached them,
    /// in order of first appearance.
    pub fn free_vars(&self) -> Vec<String> {
        let mut free = Vec::new();
        if let Some(body) = &self.body {
            let mut assigned = alloc::collections::BTreeSet::new();
            free_in_cmd(body, &mut assigned, &mut free);
        }
        free
    }

    /// Every `require_nsb` command: (label, variable, bits).
    pub fn requirements(&self) -> Vec<(Label, String, u32)> {
        let mut out = Vec::new();
        if let Some(body) = &self.body {
            body.walk(&mut |c| {
                if let CmdKind::Require { var, nsb } = &c.kind {
                    out.push((c.label, var.clone(), *nsb));
                }
            });
        }
        out
    }
}

fn free_in_expr(e: &Expr, assigned: &alloc::collections::BTreeSet<String>, free: &mut Vec<String>) {
    e.walk(&mut |n| {
        if let ExprKind::Var(x) = &n.kind {
            if !assigned.contains(x) && !free.contains(x) {
                free.push(x.clone());
            }
        }
    });
}

fn free_in_cmd(c: &Cmd, assigned: &mut alloc::collections::BTreeSet<String>, free: &mut Vec<String>) {
    match &c.kind {
        CmdKind::Seq(cs) => cs.iter().for_each(|c| free_in_cmd(c, assigned, free)),
        CmdKind::Assign { var, expr } => {
            free_in_expr(expr, assigned, free);
            assigned.insert(var.clone());
        }
        CmdKind::While { cond, body } => {
            for e in cond.exprs() {
                free_in_expr(e, assigned, free);
            }
            // the join label stands for every variable after the loop, so
            // body assignments count as reaching the code that follows
            free_in_cmd(body, assigned, free);
        }
        CmdKind::If {
            cond,
            then_branch,
            else_branch,
        } => {
            for e in cond.exprs() {
                free_in_expr(e, assigned, free);
            }
            let mut a = assigned.clone();
            free_in_cmd(then_branch, &mut a, free);
            let mut b = assigned.clone();
            if let Some(e) = else_branch {
                free_in_cmd(e, &mut b, free);
            }
            *assigned = a.union(&b).cloned().collect();
        }
        CmdKind::Require { var, .. } => {
            if !assigned.contains(var) && !free.contains(var) {
                free.push(var.clone());
            }
        }
    }
}
