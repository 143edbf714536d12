//! Elementary functions on `BigFloat` by argument reduction and series.
//!
//! Every intermediate is rounded at a working precision well above the
//! requested one, so results are faithful to far more bits than any tuned
//! program asks for; they are not claimed to be correctly rounded.

use num_traits::ToPrimitive;

use super::bigfloat::BigFloat;
use crate::frontend::MathFn;

const GUARD: u64 = 40;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MathError {
    /// the argument is outside the function's domain
    Domain,
    /// the result does not fit the supported exponent range
    Overflow,
}

/// Constants and evaluation at a fixed target precision.
#[derive(Clone, Debug)]
pub struct Elementary {
    prec: u64,
    w: u64,
    pi: BigFloat,
    ln2: BigFloat,
}

impl Elementary {
    pub fn new(prec: u64) -> Elementary {
        let w = prec + GUARD;
        Elementary {
            prec,
            w,
            pi: pi(w + 64),
            ln2: ln2(w + 64),
        }
    }

    pub fn precision(&self) -> u64 {
        self.prec
    }

    pub fn pi(&self) -> BigFloat {
        self.pi.round(self.prec)
    }

    pub fn ln2(&self) -> BigFloat {
        self.ln2.round(self.prec)
    }

    pub fn eval(&self, f: MathFn, x: &BigFloat) -> Result<BigFloat, MathError> {
        let r = match f {
            MathFn::Sin => self.sin_cos(x).0,
            MathFn::Cos => self.sin_cos(x).1,
            MathFn::Tan => {
                let (s, c) = self.sin_cos(x);
                s.div(&c, self.w).ok_or(MathError::Domain)?
            }
            MathFn::Arcsin => self.asin(x)?,
            MathFn::Arccos => {
                let half_pi = self.pi.mul_pow2(-1);
                half_pi.sub(&self.asin(x)?).round(self.w)
            }
            MathFn::Arctan => self.atan(x),
            MathFn::Log => self.log(x)?,
            MathFn::Exp => self.exp(x)?,
        };
        Ok(r.round(self.prec))
    }

    fn rnd(&self, x: BigFloat) -> BigFloat {
        x.round(self.w)
    }

    pub fn exp(&self, x: &BigFloat) -> Result<BigFloat, MathError> {
        if x.is_zero() {
            return Ok(BigFloat::one());
        }
        let approx = x.to_f64();
        if approx.is_nan() || approx.abs() >= 1e6 {
            return Err(MathError::Overflow);
        }
        let k = libm::round(approx / core::f64::consts::LN_2) as i64;
        // r = x - k ln2, |r| ≤ ln2/2 up to the estimate's slack
        let w = self.w + 64;
        let r = x.sub(&self.ln2.mul(&BigFloat::from_i64(k))).round(w);
        // halve the argument so the series converges fast, then square back
        let s = 24i64;
        let t = r.mul_pow2(-s);
        let mut sum = BigFloat::one();
        let mut term = BigFloat::one();
        let mut n = 1i64;
        loop {
            term = term.mul(&t).div(&BigFloat::from_i64(n), w).unwrap();
            if term.is_zero() || term.ufp().unwrap() < -(w as i64) - 4 {
                break;
            }
            sum = sum.add(&term).round(w);
            n += 1;
        }
        for _ in 0..s {
            sum = sum.mul(&sum).round(w);
        }
        Ok(self.rnd(sum.mul_pow2(k)))
    }

    pub fn log(&self, x: &BigFloat) -> Result<BigFloat, MathError> {
        if x.is_zero() || x.is_negative() {
            return Err(MathError::Domain);
        }
        let w = self.w + 16;
        let mut e = x.ufp().unwrap();
        let mut m = x.mul_pow2(-e);
        // m in [1,2); move to [√2/2, √2) so the atanh argument stays small
        if m.to_f64() > core::f64::consts::SQRT_2 {
            m = m.mul_pow2(-1);
            e += 1;
        }
        let one = BigFloat::one();
        let z = m.sub(&one).div(&m.add(&one), w).unwrap();
        let l = atanh_series(&z, w).mul_pow2(1);
        Ok(self.rnd(l.add(&self.ln2.mul(&BigFloat::from_i64(e)))))
    }

    /// `(sin x, cos x)`.
    pub fn sin_cos(&self, x: &BigFloat) -> (BigFloat, BigFloat) {
        if x.is_zero() {
            return (BigFloat::zero(), BigFloat::one());
        }
        let extra = x.ufp().unwrap().max(0) as u64;
        let w = self.w + extra + 16;
        let pi = if extra > 40 { pi(w + 64) } else { self.pi.clone() };
        let half_pi = pi.mul_pow2(-1);
        let k = half_pi_multiple(x, &half_pi, w);
        let r = x.sub(&half_pi.mul(&BigFloat::from_i64(k))).round(w);
        let (s, c) = sin_cos_series(&r, self.w + 16);
        let (s, c) = match k.rem_euclid(4) {
            0 => (s, c),
            1 => (c, s.neg()),
            2 => (s.neg(), c.neg()),
            _ => (c.neg(), s),
        };
        (self.rnd(s), self.rnd(c))
    }

    pub fn atan(&self, x: &BigFloat) -> BigFloat {
        if x.is_zero() {
            return BigFloat::zero();
        }
        let w = self.w + 16;
        let neg = x.is_negative();
        let a = x.abs();
        let one = BigFloat::one();
        let (mut y, flip) = if a > one { (one.div(&a, w).unwrap(), true) } else { (a, false) };
        // atan(y) = 2 atan(y / (1 + sqrt(1 + y²))), three times
        for _ in 0..3 {
            let root = one.add(&y.mul(&y)).sqrt(w).unwrap();
            y = y.div(&one.add(&root), w).unwrap();
        }
        let mut t = atan_series(&y, w).mul_pow2(3);
        if flip {
            t = self.pi.mul_pow2(-1).sub(&t);
        }
        let t = self.rnd(t);
        if neg {
            t.neg()
        } else {
            t
        }
    }

    pub fn asin(&self, x: &BigFloat) -> Result<BigFloat, MathError> {
        let one = BigFloat::one();
        match x.abs().cmp(&one) {
            core::cmp::Ordering::Greater => Err(MathError::Domain),
            core::cmp::Ordering::Equal => {
                let h = self.rnd(self.pi.mul_pow2(-1));
                Ok(if x.is_negative() { h.neg() } else { h })
            }
            core::cmp::Ordering::Less => {
                let w = self.w + 16;
                let c = one.sub(&x.mul(x)).sqrt(w).unwrap();
                Ok(self.atan(&x.div(&c, w).unwrap()))
            }
        }
    }
}

/// Nearest integer to `x / h`.
fn half_pi_multiple(x: &BigFloat, h: &BigFloat, w: u64) -> i64 {
    x.div(h, 64.max(x.ufp().unwrap().max(0) as u64 + 8))
        .map(|q| q.round_to_int().to_i64().unwrap_or(0))
        .unwrap_or_else(|| x.div(h, w).unwrap().round_to_int().to_i64().unwrap_or(0))
}

fn small_enough(term: &BigFloat, w: u64) -> bool {
    term.is_zero() || term.ufp().unwrap() < -(w as i64) - 4
}

/// `(sin r, cos r)` by Taylor series, for `|r| ≤ π/4` or so.
fn sin_cos_series(r: &BigFloat, w: u64) -> (BigFloat, BigFloat) {
    let r2 = r.mul(r).round(w);
    let mut s = r.clone();
    let mut term = r.clone();
    let mut n = 1i64;
    loop {
        term = term.mul(&r2).div(&BigFloat::from_i64((n + 1) * (n + 2)), w).unwrap().neg();
        if small_enough(&term, w) {
            break;
        }
        s = s.add(&term).round(w);
        n += 2;
    }
    let mut c = BigFloat::one();
    let mut term = BigFloat::one();
    let mut n = 0i64;
    loop {
        term = term.mul(&r2).div(&BigFloat::from_i64((n + 1) * (n + 2)), w).unwrap().neg();
        if small_enough(&term, w) {
            break;
        }
        c = c.add(&term).round(w);
        n += 2;
    }
    (s, c)
}

/// `Σ (-1)^k y^(2k+1) / (2k+1)`.
fn atan_series(y: &BigFloat, w: u64) -> BigFloat {
    odd_series(y, w, true)
}

/// `Σ y^(2k+1) / (2k+1)`.
fn atanh_series(y: &BigFloat, w: u64) -> BigFloat {
    odd_series(y, w, false)
}

fn odd_series(y: &BigFloat, w: u64, alternate: bool) -> BigFloat {
    if y.is_zero() {
        return BigFloat::zero();
    }
    let y2 = y.mul(y).round(w);
    let mut pow = y.clone();
    let mut sum = y.clone();
    let mut k = 1i64;
    loop {
        pow = pow.mul(&y2).round(w);
        if alternate {
            pow = pow.neg();
        }
        let term = pow.div(&BigFloat::from_i64(2 * k + 1), w).unwrap();
        if small_enough(&term, w) {
            break;
        }
        sum = sum.add(&term).round(w);
        k += 1;
    }
    sum
}

/// π at `w` bits: `16 atan(1/5) − 4 atan(1/239)`.
pub fn pi(w: u64) -> BigFloat {
    let ww = w + 16;
    let one = BigFloat::one();
    let a = atan_series(&one.div(&BigFloat::from_i64(5), ww).unwrap(), ww);
    let b = atan_series(&one.div(&BigFloat::from_i64(239), ww).unwrap(), ww);
    a.mul_pow2(4).sub(&b.mul_pow2(2)).round(w)
}

/// ln 2 at `w` bits: `2 atanh(1/3)`.
pub fn ln2(w: u64) -> BigFloat {
    let ww = w + 16;
    let third = BigFloat::one().div(&BigFloat::from_i64(3), ww).unwrap();
    atanh_series(&third, ww).mul_pow2(1).round(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_decimal;
    use proptest::prelude::*;

    const PI_50: &str = "3.14159265358979323846264338327950288419716939937510";
    const LN2_50: &str = "0.69314718055994530941723212145817656807550013436025";

    fn close_to_decimal(x: &BigFloat, text: &str, digits_bits: i64) {
        let d = BigFloat::from_rational(&parse_decimal(text).unwrap(), 400);
        let diff = x.sub(&d).abs();
        assert!(diff.is_zero() || diff.ufp().unwrap() < -digits_bits, "{} vs {}", x, text);
    }

    fn bf(x: f64) -> BigFloat {
        BigFloat::from_f64(x).unwrap()
    }

    #[test]
    fn constants_against_published_digits() {
        let e = Elementary::new(300);
        // fifty decimals are about 166 bits
        close_to_decimal(&e.pi(), PI_50, 160);
        close_to_decimal(&e.ln2(), LN2_50, 160);
    }

    #[test]
    #[allow(clippy::approx_constant)] // the pendulum's literal, not pi/4
    fn identities_at_high_precision() {
        let e = Elementary::new(500);
        let x = bf(0.785398);
        let (s, c) = e.sin_cos(&x);
        let one = s.mul(&s).add(&c.mul(&c));
        let err = one.sub(&BigFloat::one()).abs();
        assert!(err.is_zero() || err.ufp().unwrap() < -490);
        let back = e.exp(&e.log(&bf(3.7)).unwrap()).unwrap();
        let err = back.sub(&bf(3.7)).abs();
        assert!(err.is_zero() || err.ufp().unwrap() < -485);
        // tan(atan(x)) = x
        let t = e.eval(MathFn::Tan, &e.atan(&bf(-12.5))).unwrap();
        let err = t.sub(&bf(-12.5)).abs();
        assert!(err.is_zero() || err.ufp().unwrap() < -480);
    }

    #[test]
    fn domains() {
        let e = Elementary::new(100);
        assert_eq!(e.log(&bf(0.0)), Err(MathError::Domain));
        assert_eq!(e.eval(MathFn::Arcsin, &bf(1.5)), Err(MathError::Domain));
        assert_eq!(e.eval(MathFn::Arcsin, &bf(1.0)).unwrap(), e.pi().mul_pow2(-1).round(100));
        assert_eq!(e.eval(MathFn::Exp, &bf(0.0)).unwrap(), BigFloat::one());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn agrees_with_libm(x in -20.0f64..20.0, y in 0.001f64..50.0, z in -0.999f64..0.999) {
            let e = Elementary::new(120);
            let check = |f: MathFn, a: f64, want: f64| {
                let got = e.eval(f, &bf(a)).unwrap().to_f64();
                let tol = 1e-14 * want.abs().max(1e-300) + 1e-300;
                assert!((got - want).abs() <= tol, "{:?}({}) = {} want {}", f, a, got, want);
            };
            check(MathFn::Sin, x, libm::sin(x));
            check(MathFn::Cos, x, libm::cos(x));
            check(MathFn::Arctan, x, libm::atan(x));
            check(MathFn::Exp, x, libm::exp(x));
            check(MathFn::Log, y, libm::log(y));
            check(MathFn::Arcsin, z, libm::asin(z));
            check(MathFn::Arccos, z, libm::acos(z));
            if libm::cos(x).abs() > 1e-3 {
                check(MathFn::Tan, x, libm::tan(x));
            }
        }
    }
}
