//! Expression rules on `nsb_e` and carry-bit sites.

use alloc::vec;

use super::{Affine, ConstraintError, Generator, XiId, XiSite};
use crate::frontend::{BinOp, Label, Site};

impl Generator<'_> {
    /// `nsb_e(l) = 0`, as two inequalities.
    pub(super) fn const_e(&mut self, l: Label) {
        let e = self.nsb_e(Site::Label(l));
        self.push(Site::Label(l), vec![(e, 1)], 0, None, "CONST'", l);
        self.push(Site::Label(l), vec![(e, -1)], 0, None, "CONST'", l);
    }

    /// Elementary functions: the error bits are unbounded, encoded as a
    /// lower bound at the precision ceiling.
    pub(super) fn math_e(&mut self, l: Label) {
        let e = self.nsb_e(Site::Label(l));
        let cap = self.cfg.prec_max;
        self.push(Site::Label(l), vec![(e, 1)], cap, None, "MATH'", l);
    }

    /// A carry-bit site for the operation at `l`, when the ufps it needs are
    /// all known and the result is not exactly zero.
    pub(super) fn xi_site(&mut self, l: Label, l1: Label, l2: Label) -> Result<Option<XiId>, ConstraintError> {
        let Some((_, u1, u2)) = self.ufp_triple(l, l1, l2)? else {
            return Ok(None);
        };
        let (s1, s2) = (Site::Label(l1), Site::Label(l2));
        let (n1, n2) = (self.nsb(s1), self.nsb(s2));
        let (e1, e2) = (self.nsb_e(s1), self.nsb_e(s2));
        let site = XiSite {
            label: l,
            ops: (l1, l2),
            a: Affine::new(&[(n1, 1), (n2, -1), (e2, -1)], u2 - u1),
            b: Affine::new(&[(n2, 1), (n1, -1), (e1, -1)], u1 - u2),
        };
        Ok(Some(self.site_slot(site)))
    }

    pub(super) fn bin_e(&mut self, op: BinOp, l: Label, l1: Label, l2: Label, xi: Option<XiId>) -> Result<(), ConstraintError> {
        let here = Site::Label(l);
        let (s1, s2) = (Site::Label(l1), Site::Label(l2));
        let e = self.nsb_e(here);
        let (n1, n2) = (self.nsb(s1), self.nsb(s2));
        let (e1, e2) = (self.nsb_e(s1), self.nsb_e(s2));
        let carry = if xi.is_some() { 0 } else { 1 };
        match op {
            BinOp::Add | BinOp::Sub => {
                let rule = if op == BinOp::Add { "ADD'" } else { "SUB'" };
                self.ge_e(here, s1, rule, l);
                self.ge_e(here, s2, rule, l);
                let u1 = self.ufp_pair(l1, l, rule)?;
                let u2 = self.ufp_pair(l2, l, rule)?;
                if let (Some((u1, _)), Some((u2, _))) = (u1, u2) {
                    let r1 = vec![(e, 1), (n2, -1), (n1, 1), (e2, -1)];
                    self.push(here, r1, u1 - u2 + carry, xi, rule, l);
                    let r2 = vec![(e, 1), (n1, -1), (n2, 1), (e1, -1)];
                    self.push(here, r2, u2 - u1 + carry, xi, rule, l);
                }
            }
            BinOp::Mul | BinOp::Div => {
                let rule = if op == BinOp::Mul { "MULT'" } else { "DIV'" };
                for ni in [n1, n2] {
                    self.push(here, vec![(e, 1), (ni, -1), (e1, -1), (e2, -1)], -2, None, rule, l);
                }
            }
        }
        Ok(())
    }
}
