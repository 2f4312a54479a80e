//! Small exact-integer helpers shared by the other modules.

use num_integer::{Integer, Roots};

use crate::error::{Error, Result};

/// Converts an `i128` back to the coefficient width, reporting overflow.
#[inline]
pub(crate) fn narrow(v: i128, what: &'static str) -> Result<i64> {
    i64::try_from(v).map_err(|_| Error::ArithmeticRange(what))
}

#[inline]
pub(crate) fn square(v: i64) -> i128 {
    let v = v as i128;
    v * v
}

/// Floor of the square root of a non-negative integer.
pub fn isqrt(v: i128) -> i128 {
    debug_assert!(v >= 0);
    v.sqrt()
}

/// Smallest `s` with `s * s >= v`.
pub fn ceil_sqrt(v: i128) -> i128 {
    let s = isqrt(v);
    if s * s == v {
        s
    } else {
        s + 1
    }
}

pub fn is_square(v: i128) -> bool {
    v >= 0 && {
        let s = isqrt(v);
        s * s == v
    }
}

/// gcd with the convention gcd(0, x) = |x|.
#[inline]
pub fn gcd(a: i64, b: i64) -> u64 {
    a.unsigned_abs().gcd(&b.unsigned_abs())
}

#[inline]
pub fn gcd3(a: i64, b: i64, c: i64) -> u64 {
    let g = gcd(a, b);
    g.gcd(&c.unsigned_abs())
}
