//! Integral binary quadratic forms `a u^2 + b uv + c v^2`.
//!
//! Coefficients are stored as `i64`; every operation that can grow them runs
//! in `i128` and narrows back with an explicit range check, so overflow is
//! reported as [`Error::ArithmeticRange`] instead of wrapping.
//!
//! The three coefficient moves are the substitutions
//!
//! - `T q(u, v) = q(u + v, v)`, i.e. `[a, b, c] -> [a, b + 2a, a + b + c]`
//! - `S q(u, v) = q(-v, u)`, i.e. `[a, b, c] -> [c, -b, a]`
//! - `U = T o S`, i.e. `[a, b, c] -> [c, -b + 2c, a - b + c]`
//!
//! All three have determinant one, so they preserve the discriminant and
//! primitivity.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::arith::{gcd3, narrow, square};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct IntForm {
    pub a: i64,
    pub b: i64,
    pub c: i64,
}

impl IntForm {
    pub const fn new(a: i64, b: i64, c: i64) -> Self {
        Self { a, b, c }
    }

    /// `b^2 - 4ac`, exact.
    pub fn discriminant(&self) -> Result<i128> {
        let four_ac = (4 * self.a as i128)
            .checked_mul(self.c as i128)
            .ok_or(Error::ArithmeticRange("discriminant: 4ac"))?;
        square(self.b)
            .checked_sub(four_ac)
            .ok_or(Error::ArithmeticRange("discriminant: b^2 - 4ac"))
    }

    /// `gcd(|a|, |b|, |c|) == 1`. The all-zero form has no content and is rejected.
    pub fn is_primitive(&self) -> Result<bool> {
        if self.a == 0 && self.b == 0 && self.c == 0 {
            return Err(Error::InvalidInput(
                "primitivity of the zero form is undefined".into(),
            ));
        }
        Ok(gcd3(self.a, self.b, self.c) == 1)
    }

    pub fn apply_t(&self) -> Result<Self> {
        let (a, b, c) = self.wide();
        Ok(Self {
            a: self.a,
            b: narrow(b + 2 * a, "T: b + 2a")?,
            c: narrow(a + b + c, "T: a + b + c")?,
        })
    }

    pub fn apply_s(&self) -> Result<Self> {
        Ok(Self {
            a: self.c,
            b: self.b.checked_neg().ok_or(Error::ArithmeticRange("S: -b"))?,
            c: self.a,
        })
    }

    pub fn apply_u(&self) -> Result<Self> {
        let (a, b, c) = self.wide();
        Ok(Self {
            a: self.c,
            b: narrow(2 * c - b, "U: -b + 2c")?,
            c: narrow(a - b + c, "U: a - b + c")?,
        })
    }

    pub fn apply(&self, mv: Move) -> Result<Self> {
        match mv {
            Move::Identity => Ok(*self),
            Move::T => self.apply_t(),
            Move::U => self.apply_u(),
        }
    }

    /// Picks the first of `f`, `T f`, `U f` whose outer coefficients share
    /// parity. Requires `disc(f) = 0 (mod 4)`, which forces `b` even.
    pub fn parity_fix(&self) -> Result<ParityFixOutcome> {
        let d = self.discriminant()?;
        if d.rem_euclid(4) != 0 {
            return Err(Error::InvalidDiscriminant {
                d,
                reason: "parity repair needs d = 0 (mod 4)",
            });
        }
        let mv = match (self.a & 1, self.c & 1) {
            (x, y) if x == y => Move::Identity,
            // a odd, c even
            (1, 0) => Move::T,
            // a even, c odd
            _ => Move::U,
        };
        let form = self.apply(mv)?;
        debug_assert!(form.b & 1 == 0 && (form.a - form.c) & 1 == 0);
        Ok(ParityFixOutcome { form, mv })
    }

    #[inline]
    fn wide(&self) -> (i128, i128, i128) {
        (self.a as i128, self.b as i128, self.c as i128)
    }

    pub fn negate(&self) -> Result<Self> {
        let neg = |v: i64| v.checked_neg().ok_or(Error::ArithmeticRange("negation"));
        Ok(Self::new(neg(self.a)?, neg(self.b)?, neg(self.c)?))
    }
}

impl fmt::Display for IntForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{},{}]", self.a, self.b, self.c)
    }
}

impl From<(i64, i64, i64)> for IntForm {
    fn from((a, b, c): (i64, i64, i64)) -> Self {
        Self::new(a, b, c)
    }
}

/// Which coefficient move a parity repair used. Also names the linear maps
/// certified on the hyperboloid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Move {
    Identity,
    T,
    U,
}

impl Move {
    pub const ALL: [Move; 3] = [Move::Identity, Move::T, Move::U];

    /// Action on `(A, B, C)` as an integer matrix, rows giving the new coordinates.
    pub const fn matrix(self) -> [[i64; 3]; 3] {
        match self {
            Move::Identity => [[1, 0, 0], [0, 1, 0], [0, 0, 1]],
            Move::T => [[1, 0, 0], [2, 1, 0], [1, 1, 1]],
            Move::U => [[0, 0, 1], [0, -1, 2], [1, -1, 1]],
        }
    }

    /// Inverse of [`Move::matrix`].
    pub const fn inverse_matrix(self) -> [[i64; 3]; 3] {
        match self {
            Move::Identity => [[1, 0, 0], [0, 1, 0], [0, 0, 1]],
            Move::T => [[1, 0, 0], [-2, 1, 0], [1, -1, 1]],
            Move::U => [[1, -1, 1], [2, -1, 0], [1, 0, 0]],
        }
    }

    pub const fn name(self) -> &'static str {
        match self {
            Move::Identity => "I",
            Move::T => "T",
            Move::U => "U",
        }
    }
}

impl fmt::Display for Move {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParityFixOutcome {
    pub form: IntForm,
    pub mv: Move,
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn f(a: i64, b: i64, c: i64) -> IntForm {
        IntForm::new(a, b, c)
    }

    #[test]
    fn discriminant_examples() {
        assert_eq!(f(1, 0, -1).discriminant().unwrap(), 4);
        assert_eq!(f(0, 1, 0).discriminant().unwrap(), 1);
        assert_eq!(f(3, 2, -1).discriminant().unwrap(), 16);
    }

    #[test]
    fn discriminant_range() {
        let big = f(i64::MIN, 0, i64::MIN);
        assert!(matches!(big.discriminant(), Err(Error::ArithmeticRange(_))));
        let ok = f(i64::MAX, i64::MAX, 1);
        assert!(ok.discriminant().is_ok());
    }

    #[test]
    fn primitivity() {
        assert!(f(1, 2, -1).is_primitive().unwrap());
        assert!(!f(2, 0, -2).is_primitive().unwrap());
        assert!(f(0, 2, 1).is_primitive().unwrap());
        assert!(matches!(f(0, 0, 0).is_primitive(), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn moves() {
        assert_eq!(f(1, 0, -1).apply_t().unwrap(), f(1, 2, 0));
        assert_eq!(f(0, 1, 0).apply_t().unwrap(), f(0, 1, 1));
        assert_eq!(f(1, -2, 0).apply_t().unwrap(), f(1, 0, -1));

        assert_eq!(f(1, 2, -1).apply_s().unwrap(), f(-1, -2, 1));
        assert_eq!(f(0, 1, 0).apply_s().unwrap(), f(0, -1, 0));
        assert_eq!(f(3, 2, -1).apply_s().unwrap().apply_s().unwrap(), f(3, 2, -1));

        assert_eq!(f(2, 0, -1).apply_u().unwrap(), f(-1, -2, 1));
        assert_eq!(f(0, 1, 0).apply_u().unwrap(), f(0, -1, -1));
        let g = f(5, 4, -2);
        assert_eq!(g.apply_u().unwrap(), g.apply_s().unwrap().apply_t().unwrap());
    }

    #[test]
    fn move_overflow_is_reported() {
        assert!(f(i64::MAX, 0, 0).apply_t().is_err());
        assert!(f(0, i64::MIN, 0).apply_s().is_err());
        assert!(f(0, i64::MIN, i64::MAX).apply_u().is_err());
    }

    #[test]
    fn parity_fix_examples() {
        let out = f(1, 0, -1).parity_fix().unwrap();
        assert_eq!((out.form, out.mv), (f(1, 0, -1), Move::Identity));
        let out = f(1, 0, -2).parity_fix().unwrap();
        assert_eq!((out.form, out.mv), (f(1, 2, -1), Move::T));
        let out = f(2, 0, -1).parity_fix().unwrap();
        assert_eq!((out.form, out.mv), (f(-1, -2, 1), Move::U));
    }

    #[test]
    fn parity_fix_rejects_odd_discriminant() {
        assert!(matches!(
            f(1, 1, -1).parity_fix(),
            Err(Error::InvalidDiscriminant { d: 5, .. })
        ));
    }

    #[test]
    fn matrices_match_coefficient_moves() {
        let g = f(7, -3, 11);
        for mv in Move::ALL {
            let m = mv.matrix();
            let v = [g.a, g.b, g.c];
            let row = |r: [i64; 3]| r[0] * v[0] + r[1] * v[1] + r[2] * v[2];
            let img = f(row(m[0]), row(m[1]), row(m[2]));
            assert_eq!(img, g.apply(mv).unwrap());
        }
    }

    #[test]
    fn inverse_matrices() {
        for mv in Move::ALL {
            let (m, inv) = (mv.matrix(), mv.inverse_matrix());
            for (i, row) in m.iter().enumerate() {
                for j in 0..3 {
                    let v: i64 = row.iter().zip(&inv).map(|(x, col)| x * col[j]).sum();
                    assert_eq!(v, (i == j) as i64);
                }
            }
        }
    }

    fn small_form() -> impl Strategy<Value = IntForm> {
        (-10_000i64..=10_000, -10_000i64..=10_000, -10_000i64..=10_000)
            .prop_map(IntForm::from)
    }

    proptest! {
        #[test]
        fn moves_preserve_discriminant(g in small_form()) {
            let d = g.discriminant().unwrap();
            prop_assert_eq!(g.apply_t().unwrap().discriminant().unwrap(), d);
            prop_assert_eq!(g.apply_s().unwrap().discriminant().unwrap(), d);
            prop_assert_eq!(g.apply_u().unwrap().discriminant().unwrap(), d);
            prop_assert_eq!(g.apply_u().unwrap(), g.apply_s().unwrap().apply_t().unwrap());
        }

        #[test]
        fn moves_preserve_primitivity(g in small_form()) {
            prop_assume!(g != IntForm::new(0, 0, 0));
            let p = g.is_primitive().unwrap();
            for h in [g.apply_t().unwrap(), g.apply_s().unwrap(), g.apply_u().unwrap()] {
                prop_assert_eq!(h.is_primitive().unwrap(), p);
            }
        }

        #[test]
        fn parity_fix_postconditions(a in -10_000i64..=10_000, y in -5_000i64..=5_000, c in -10_000i64..=10_000) {
            let g = IntForm::new(a, 2 * y, c);
            let out = g.parity_fix().unwrap();
            prop_assert_eq!(out.form.b & 1, 0);
            prop_assert_eq!((out.form.a - out.form.c) & 1, 0);
            prop_assert_eq!(out.form.discriminant().unwrap(), g.discriminant().unwrap());
            prop_assert_eq!(out.form, g.apply(out.mv).unwrap());
        }
    }
}
