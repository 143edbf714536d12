//! Binary floating-point numbers of arbitrary precision.
//!
//! A value is `m · 2^e` with an integer significand kept odd, so equal values
//! are equal structurally. Addition, subtraction and multiplication are exact;
//! `round` gives round-to-nearest-even at a number of significant bits, and
//! division and square root are correctly rounded.

use core::cmp::Ordering;
use core::fmt;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BigFloat {
    m: BigInt,
    e: i64,
}

fn bits(u: &BigUint) -> u64 {
    u.bits()
}

impl BigFloat {
    pub fn zero() -> BigFloat {
        BigFloat { m: BigInt::zero(), e: 0 }
    }

    pub fn one() -> BigFloat {
        BigFloat::from_i64(1)
    }

    pub fn from_parts(m: BigInt, e: i64) -> BigFloat {
        let mut x = BigFloat { m, e };
        x.normalize();
        x
    }

    pub fn from_i64(v: i64) -> BigFloat {
        BigFloat::from_parts(BigInt::from(v), 0)
    }

    /// `2^k`.
    pub fn pow2(k: i64) -> BigFloat {
        BigFloat { m: BigInt::one(), e: k }
    }

    /// Exact value of a finite double.
    pub fn from_f64(x: f64) -> Option<BigFloat> {
        if !x.is_finite() {
            return None;
        }
        if x == 0.0 {
            return Some(BigFloat::zero());
        }
        let b = x.to_bits();
        let exp = ((b >> 52) & 0x7ff) as i64;
        let frac = b & ((1u64 << 52) - 1);
        let (m, e) = if exp == 0 { (frac, -1074) } else { (frac | (1u64 << 52), exp - 1075) };
        let m = BigInt::from(m);
        Some(BigFloat::from_parts(if x < 0.0 { -m } else { m }, e))
    }

    /// `q` rounded to `prec` significant bits.
    pub fn from_rational(q: &BigRational, prec: u64) -> BigFloat {
        if q.is_zero() {
            return BigFloat::zero();
        }
        let n = q.numer().magnitude();
        let d = q.denom().magnitude();
        // a quotient of at least prec + 2 bits
        let shift = (prec as i64 + 2 + bits(d) as i64 - bits(n) as i64 + 1).max(0);
        let (quo, rem) = (n << shift as u64).div_rem(d);
        let m = BigInt::from_biguint(q.numer().sign(), quo);
        round_parts(m, -shift, prec, !rem.is_zero())
    }

    /// Exact rational value.
    pub fn to_rational(&self) -> BigRational {
        if self.e >= 0 {
            BigRational::from_integer(&self.m << self.e as u64)
        } else {
            BigRational::new(self.m.clone(), BigInt::one() << (-self.e) as u64)
        }
    }

    fn normalize(&mut self) {
        if self.m.is_zero() {
            self.e = 0;
            return;
        }
        let tz = self.m.magnitude().trailing_zeros().unwrap_or(0);
        if tz > 0 {
            self.m >>= tz;
            self.e += tz as i64;
        }
    }

    pub fn is_zero(&self) -> bool {
        self.m.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.m.is_negative()
    }

    pub fn abs(&self) -> BigFloat {
        BigFloat {
            m: self.m.abs(),
            e: self.e,
        }
    }

    pub fn neg(&self) -> BigFloat {
        BigFloat {
            m: -self.m.clone(),
            e: self.e,
        }
    }

    /// `self · 2^k`, exact.
    pub fn mul_pow2(&self, k: i64) -> BigFloat {
        if self.is_zero() {
            return BigFloat::zero();
        }
        BigFloat { m: self.m.clone(), e: self.e + k }
    }

    /// `⌊log2 |x|⌋`; `None` at zero.
    pub fn ufp(&self) -> Option<i64> {
        if self.is_zero() {
            None
        } else {
            Some(bits(self.m.magnitude()) as i64 - 1 + self.e)
        }
    }

    /// Significant bits of the significand.
    pub fn precision(&self) -> u64 {
        bits(self.m.magnitude())
    }

    /// Round to nearest, ties to even, at `prec ≥ 1` significant bits.
    pub fn round(&self, prec: u64) -> BigFloat {
        round_parts(self.m.clone(), self.e, prec, false)
    }

    pub fn add(&self, o: &BigFloat) -> BigFloat {
        if self.is_zero() {
            return o.clone();
        }
        if o.is_zero() {
            return self.clone();
        }
        let e = self.e.min(o.e);
        let a = &self.m << (self.e - e) as u64;
        let b = &o.m << (o.e - e) as u64;
        BigFloat::from_parts(a + b, e)
    }

    pub fn sub(&self, o: &BigFloat) -> BigFloat {
        self.add(&o.neg())
    }

    pub fn mul(&self, o: &BigFloat) -> BigFloat {
        BigFloat::from_parts(&self.m * &o.m, self.e + o.e)
    }

    /// `self / o` at `prec` bits; `None` when `o` is zero.
    pub fn div(&self, o: &BigFloat, prec: u64) -> Option<BigFloat> {
        if o.is_zero() {
            return None;
        }
        if self.is_zero() {
            return Some(BigFloat::zero());
        }
        let (n, d) = (self.m.magnitude(), o.m.magnitude());
        let shift = (prec as i64 + 2 + bits(d) as i64 - bits(n) as i64 + 1).max(0);
        let (quo, rem) = (n << shift as u64).div_rem(d);
        let sign = if self.m.sign() == o.m.sign() { Sign::Plus } else { Sign::Minus };
        Some(round_parts(
            BigInt::from_biguint(sign, quo),
            self.e - o.e - shift,
            prec,
            !rem.is_zero(),
        ))
    }

    /// Square root at `prec` bits; `None` for negative values.
    pub fn sqrt(&self, prec: u64) -> Option<BigFloat> {
        if self.is_negative() {
            return None;
        }
        if self.is_zero() {
            return Some(BigFloat::zero());
        }
        let n = self.m.magnitude();
        let mut k = (2 * (prec as i64 + 2) + 2 - bits(n) as i64).max(0);
        if (self.e - k).rem_euclid(2) != 0 {
            k += 1;
        }
        let wide = n << k as u64;
        let s = wide.sqrt();
        let sticky = &s * &s != wide;
        Some(round_parts(BigInt::from_biguint(Sign::Plus, s), (self.e - k) / 2, prec, sticky))
    }

    /// Nearest double, for display and summaries.
    pub fn to_f64(&self) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let r = self.round(53);
        let m = r.m.to_f64().unwrap_or(f64::NAN);
        // scale in steps so intermediate powers stay finite
        let mut e = r.e;
        let mut v = m;
        while e > 1000 {
            v *= libm::exp2(1000.0);
            e -= 1000;
        }
        while e < -1000 {
            v *= libm::exp2(-1000.0);
            e += 1000;
        }
        v * libm::exp2(e as f64)
    }

    /// Nearest integer, ties away from zero.
    pub fn round_to_int(&self) -> BigInt {
        if self.e >= 0 {
            return &self.m << self.e as u64;
        }
        let sh = (-self.e) as u64;
        let mag = self.m.magnitude();
        let q = mag >> sh;
        let half = BigUint::one() << (sh - 1);
        let r = mag - (&q << sh);
        let q = if r >= half { q + 1u32 } else { q };
        BigInt::from_biguint(self.m.sign(), q)
    }
}

/// Rounds `m · 2^e` to `prec` bits; `sticky` marks a nonzero tail below `m`
/// (then `m` must carry at least `prec + 2` bits).
fn round_parts(m: BigInt, e: i64, prec: u64, sticky: bool) -> BigFloat {
    let prec = prec.max(1);
    let sign = m.sign();
    let u = m.magnitude();
    let b = bits(u);
    if b <= prec {
        return BigFloat::from_parts(m, e);
    }
    let shift = b - prec;
    let q = u >> shift;
    let r = u - (&q << shift);
    let half = BigUint::one() << (shift - 1);
    let up = match r.cmp(&half) {
        Ordering::Greater => true,
        Ordering::Less => false,
        Ordering::Equal => sticky || q.is_odd(),
    };
    let q = if up { q + 1u32 } else { q };
    BigFloat::from_parts(BigInt::from_biguint(sign, q), e + shift as i64)
}

impl Ord for BigFloat {
    fn cmp(&self, o: &BigFloat) -> Ordering {
        let (sa, sb) = (self.m.sign(), o.m.sign());
        if sa != sb {
            let rank = |s: Sign| match s {
                Sign::Minus => 0,
                Sign::NoSign => 1,
                Sign::Plus => 2,
            };
            return rank(sa).cmp(&rank(sb));
        }
        if sa == Sign::NoSign {
            return Ordering::Equal;
        }
        // same sign: compare magnitudes by leading exponent, then exactly
        let (ua, ub) = (self.ufp().unwrap(), o.ufp().unwrap());
        let mag = if ua != ub {
            ua.cmp(&ub)
        } else {
            let e = self.e.min(o.e);
            let a = self.m.magnitude() << (self.e - e) as u64;
            let b = o.m.magnitude() << (o.e - e) as u64;
            a.cmp(&b)
        };
        if sa == Sign::Minus {
            mag.reverse()
        } else {
            mag
        }
    }
}

impl PartialOrd for BigFloat {
    fn partial_cmp(&self, o: &BigFloat) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

impl fmt::Display for BigFloat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:e}", self.to_f64())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bf(x: f64) -> BigFloat {
        BigFloat::from_f64(x).unwrap()
    }

    #[test]
    fn round_to_nearest_even() {
        // 0b1011 at 3 bits: tie between 0b1010 and 0b1100 goes to 0b1100
        assert_eq!(BigFloat::from_i64(11).round(3), BigFloat::from_i64(12));
        // 0b1001 at 3 bits: tie, 0b1000 is even
        assert_eq!(BigFloat::from_i64(9).round(3), BigFloat::from_i64(8));
        assert_eq!(BigFloat::from_i64(13).round(3), BigFloat::from_i64(12));
        assert_eq!(BigFloat::from_i64(-11).round(3), BigFloat::from_i64(-12));
        assert_eq!(bf(0.5).round(1), bf(0.5));
    }

    #[test]
    #[allow(clippy::approx_constant)] // the pendulum's literal, not pi/4
    fn decimal_rounding_matches_doubles() {
        let q = BigRational::new(BigInt::from(1), BigInt::from(10));
        assert_eq!(BigFloat::from_rational(&q, 53), bf(0.1));
        let q = BigRational::new(BigInt::from(785398), BigInt::from(1000000));
        assert_eq!(BigFloat::from_rational(&q, 53), bf(0.785398));
        assert_eq!(BigFloat::from_rational(&q, 24).to_f64(), 0.785398f32 as f64);
    }

    #[test]
    fn ufp_of_powers_of_two() {
        for k in -100..=100 {
            assert_eq!(BigFloat::pow2(k).ufp(), Some(k));
            assert_eq!(BigFloat::pow2(k).add(&BigFloat::pow2(k - 60)).ufp(), Some(k));
        }
    }

    proptest! {
        #[test]
        fn arithmetic_matches_doubles(a in -1e6f64..1e6, b in -1e6f64..1e6) {
            let (x, y) = (bf(a), bf(b));
            prop_assert_eq!(x.add(&y).round(53).to_f64(), a + b);
            prop_assert_eq!(x.sub(&y).round(53).to_f64(), a - b);
            prop_assert_eq!(x.mul(&y).round(53).to_f64(), a * b);
            if b != 0.0 {
                prop_assert_eq!(x.div(&y, 53).unwrap().to_f64(), a / b);
            }
            prop_assert_eq!(x.abs().sqrt(53).unwrap().to_f64(), a.abs().sqrt());
            prop_assert_eq!(x.cmp(&y), a.partial_cmp(&b).unwrap());
        }

        #[test]
        fn single_precision_matches_f32(a in -1e3f32..1e3, b in 0.5f32..1e3) {
            let (x, y) = (bf(a as f64), bf(b as f64));
            prop_assert_eq!(x.div(&y, 24).unwrap().to_f64(), (a / b) as f64);
            prop_assert_eq!(x.mul(&y).round(24).to_f64(), (a * b) as f64);
            prop_assert_eq!(y.sqrt(24).unwrap().to_f64(), b.sqrt() as f64);
        }

        #[test]
        fn rational_round_trip(a in -1e9f64..1e9) {
            let x = bf(a);
            prop_assert_eq!(BigFloat::from_rational(&x.to_rational(), 53), x);
        }
    }
}
