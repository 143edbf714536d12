//! Bounds on the error of one operation, from the errors of its operands.

use super::bigfloat::BigFloat;
use super::elementary::{Elementary, MathError};
use crate::frontend::{BinOp, MathFn};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrOp {
    Bin(BinOp),
    Math(MathFn),
    Sqrt,
}

/// `2^(ufp(c) - p)`, the error of `c` held with `p` significant bits; zero
/// for `c = 0`.
pub fn operand_error(c: &BigFloat, p: i64) -> BigFloat {
    match c.ufp() {
        Some(u) => BigFloat::pow2(u - p),
        None => BigFloat::zero(),
    }
}

fn rounding(result: &BigFloat, prec: i64) -> BigFloat {
    operand_error(result, prec)
}

/// Bound on the error of `op` applied to exact operands `args[i]` held at
/// `precs[i]` bits, computed at `prec` bits; `phi` bits are charged to
/// elementary functions. Subtraction adds the operand errors: they may have
/// either sign.
pub fn check_error_model(
    op: ErrOp,
    args: &[BigFloat],
    precs: &[i64],
    prec: i64,
    phi: i64,
    elem: &Elementary,
) -> Result<BigFloat, MathError> {
    let e: alloc::vec::Vec<BigFloat> = args.iter().zip(precs).map(|(c, &p)| operand_error(c, p)).collect();
    let w = elem.precision();
    Ok(match op {
        ErrOp::Bin(BinOp::Add) => e[0].add(&e[1]).add(&rounding(&args[0].add(&args[1]), prec)),
        ErrOp::Bin(BinOp::Sub) => e[0].add(&e[1]).add(&rounding(&args[0].sub(&args[1]), prec)),
        ErrOp::Bin(BinOp::Mul) => product_bound(&args[0], &e[0], &args[1], &e[1], prec),
        ErrOp::Bin(BinOp::Div) => {
            let inv = BigFloat::one().div(&args[1], w).ok_or(MathError::Domain)?;
            let e_inv = operand_error(&inv, precs[1]);
            product_bound(&args[0], &e[0], &inv, &e_inv, prec)
        }
        ErrOp::Math(f) => {
            let v = elem.eval(f, &args[0])?;
            match v.ufp() {
                Some(u) => BigFloat::pow2(u - precs[0] + phi).add(&BigFloat::pow2(u - prec)),
                None => BigFloat::zero(),
            }
        }
        ErrOp::Sqrt => {
            let v = args[0].sqrt(w).ok_or(MathError::Domain)?;
            match v.ufp() {
                Some(u) => BigFloat::pow2(u - precs[0]).add(&BigFloat::pow2(u - prec)),
                None => BigFloat::zero(),
            }
        }
    })
}

/// `|c1| e2 + |c2| e1 + e1 e2 + 2^(ufp(c1 c2) - prec)`.
fn product_bound(c1: &BigFloat, e1: &BigFloat, c2: &BigFloat, e2: &BigFloat, prec: i64) -> BigFloat {
    c1.abs()
        .mul(e2)
        .add(&c2.abs().mul(e1))
        .add(&e1.mul(e2))
        .add(&rounding(&c1.mul(c2), prec))
}
