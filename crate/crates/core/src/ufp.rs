//! Unit in the first place: `ufp(x) = floor(log2 |x|)`, computed exactly.

use core::fmt;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{Signed, Zero};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ZeroUfp;

impl fmt::Display for ZeroUfp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("ufp of zero is undefined")
    }
}

/// `floor(log2 |q|)` for a non-zero rational.
pub fn ufp_rational(q: &BigRational) -> Result<i64, ZeroUfp> {
    if q.is_zero() {
        return Err(ZeroUfp);
    }
    let n = q.numer().abs().to_biguint().unwrap();
    let d = q.denom().abs().to_biguint().unwrap();
    Ok(ufp_ratio(&n, &d))
}

/// `floor(log2(n/d))` for positive integers.
pub fn ufp_ratio(n: &BigUint, d: &BigUint) -> i64 {
    let k = n.bits() as i64 - d.bits() as i64;
    // 2^k <= n/d < 2^(k+1) or 2^(k-1) <= n/d < 2^k
    let below = if k >= 0 {
        n < &(d << (k as u64))
    } else {
        &(n << ((-k) as u64)) < d
    };
    if below {
        k - 1
    } else {
        k
    }
}

/// `floor(log2 |n|)` for a non-zero integer.
pub fn ufp_int(n: &BigInt) -> Result<i64, ZeroUfp> {
    if n.is_zero() {
        return Err(ZeroUfp);
    }
    Ok(n.bits() as i64 - 1)
}

/// Exact ufp of a finite non-zero double, subnormals included.
pub fn ufp_f64(x: f64) -> Result<i64, ZeroUfp> {
    if x == 0.0 || !x.is_finite() {
        return Err(ZeroUfp);
    }
    Ok(libm::ilogb(x) as i64)
}
