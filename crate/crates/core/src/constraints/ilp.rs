//! Expression rules on `nsb`.

use super::{ConstraintError, Generator, GenWarning, UfpInfo, XiId};
use crate::frontend::{BinOp, Expr, ExprKind, Label, Site};

impl Generator<'_> {
    /// Rules for the node `e` itself; operands are already handled.
    pub(super) fn expr_rules(&mut self, e: &Expr) -> Result<(), ConstraintError> {
        let l = e.label;
        let here = Site::Label(l);
        match &e.kind {
            ExprKind::Const { .. } => {
                if self.pi() {
                    self.const_e(l);
                }
            }
            ExprKind::Var(_) => unreachable!("handled by the identifier rule"),
            ExprKind::Bin(op, a, b) => {
                let xi = if self.pi() { self.xi_site(l, a.label, b.label)? } else { None };
                let rule = match op {
                    BinOp::Add => "ADD",
                    BinOp::Sub => "SUB",
                    BinOp::Mul => "MULT",
                    BinOp::Div => "DIV",
                };
                // a constant carry is folded into the right-hand side
                let carry = if xi.is_some() { 0 } else { 1 };
                match op {
                    BinOp::Add | BinOp::Sub => {
                        for op_label in [a.label, b.label] {
                            if let Some((ui, u)) = self.ufp_pair(op_label, l, rule)? {
                                self.ge(Site::Label(op_label), here, ui - u + carry, xi, rule, l);
                            }
                        }
                    }
                    BinOp::Mul | BinOp::Div => {
                        for op_label in [a.label, b.label] {
                            self.ge(Site::Label(op_label), here, carry - 1, xi, rule, l);
                        }
                    }
                }
                if self.pi() {
                    self.bin_e(*op, l, a.label, b.label, xi)?;
                }
            }
            ExprKind::Sqrt(a) => {
                self.ge(Site::Label(a.label), here, 0, None, "SQRT", l);
                if self.pi() {
                    self.ge_e(here, Site::Label(a.label), "SQRT'", l);
                }
            }
            ExprKind::Math(_, a) => {
                let phi = self.cfg.phi;
                self.ge(Site::Label(a.label), here, phi, None, "MATH", l);
                if self.pi() {
                    self.math_e(l);
                }
            }
        }
        Ok(())
    }

    /// `(ufp(operand), ufp(result))` when both are known; otherwise the rule
    /// is dropped for that operand with a warning.
    pub(super) fn ufp_pair(
        &mut self,
        operand: Label,
        result: Label,
        rule: &'static str,
    ) -> Result<Option<(i64, i64)>, ConstraintError> {
        let (ui, u) = (self.ufp(operand)?, self.ufp(result)?);
        Ok(match (ui, u) {
            (UfpInfo::Known(ui), UfpInfo::Known(u)) => Some((ui, u)),
            (UfpInfo::Zero, _) => {
                self.sys.warnings.push(GenWarning::DroppedZero { label: operand, rule });
                None
            }
            (_, UfpInfo::Zero) => {
                self.sys.warnings.push(GenWarning::DroppedZero { label: result, rule });
                None
            }
            (UfpInfo::Unreached, _) => {
                self.sys.warnings.push(GenWarning::SkippedUnreached { label: operand, rule });
                None
            }
            (_, UfpInfo::Unreached) => {
                self.sys.warnings.push(GenWarning::SkippedUnreached { label: result, rule });
                None
            }
        })
    }

    /// Known ufps of both operands and the result, if all exist.
    pub(super) fn ufp_triple(&self, l: Label, l1: Label, l2: Label) -> Result<Option<(i64, i64, i64)>, ConstraintError> {
        Ok(match (self.ufp(l)?, self.ufp(l1)?, self.ufp(l2)?) {
            (UfpInfo::Known(u), UfpInfo::Known(u1), UfpInfo::Known(u2)) => Some((u, u1, u2)),
            _ => None,
        })
    }

    pub(super) fn site_slot(&mut self, site: super::XiSite) -> XiId {
        self.sys.xi_sites.push(site);
        self.sys.xi_sites.len() - 1
    }
}
